/** More-Like-This hop history: bounded stack with back navigation. */

import type { ResultRow } from "./protocol.js";

export const MAX_BREADCRUMBS = 10;

export interface Crumb {
  label: string;
  results: ResultRow[];
}

export class Breadcrumbs {
  private stack: Crumb[] = [];

  push(label: string, results: ResultRow[]): void {
    this.stack.push({ label, results: [...results] });
    if (this.stack.length > MAX_BREADCRUMBS) {
      this.stack.splice(0, this.stack.length - MAX_BREADCRUMBS);
    }
  }

  /** Pop and return the previous grid, or null at the root. */
  back(): Crumb | null {
    return this.stack.pop() ?? null;
  }

  get depth(): number {
    return this.stack.length;
  }

  labels(): string[] {
    return this.stack.map((c) => c.label);
  }
}
