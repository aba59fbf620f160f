/** Relevance shading: green saturation proportional to the score. */

export function relevanceColor(score: number): string {
  const clamped = Math.max(0, Math.min(1, score));
  // interpolate white -> saturated green; alpha channel keeps text legible
  const saturation = Math.round(clamped * 100);
  return `hsl(125, ${saturation}%, ${88 - Math.round(clamped * 30)}%)`;
}

/** Monotone scalar used by tests and the sort badge. */
export function relevanceLevel(score: number): number {
  return Math.max(0, Math.min(1, score));
}
