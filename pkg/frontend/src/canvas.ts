/**
 * Sketch canvas: 400x400, white background, black default brush with an
 * adjustable width and a small palette. Export is a PNG data URL; the
 * submit control stays disabled until at least one stroke landed.
 */

export const CANVAS_SIZE = 400;
export const PALETTE = ["#000000", "#d32f2f", "#1976d2", "#388e3c", "#fbc02d", "#ffffff"];

export class SketchCanvas {
  strokeCount = 0;
  brushColor = PALETTE[0];
  brushWidth = 6;
  private ctx: CanvasRenderingContext2D;
  private drawing = false;
  private listeners: (() => void)[] = [];

  constructor(private canvas: HTMLCanvasElement) {
    canvas.width = CANVAS_SIZE;
    canvas.height = CANVAS_SIZE;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
    this.clear();
    canvas.addEventListener("pointerdown", (e) => this.begin(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    window.addEventListener("pointerup", () => this.end());
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  private position(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * CANVAS_SIZE,
      ((e.clientY - rect.top) / rect.height) * CANVAS_SIZE,
    ];
  }

  private begin(e: PointerEvent): void {
    this.drawing = true;
    const [x, y] = this.position(e);
    this.ctx.strokeStyle = this.brushColor;
    this.ctx.lineWidth = this.brushWidth;
    this.ctx.lineCap = "round";
    this.ctx.lineJoin = "round";
    this.ctx.beginPath();
    this.ctx.moveTo(x, y);
    this.ctx.lineTo(x + 0.01, y + 0.01);
    this.ctx.stroke();
  }

  private move(e: PointerEvent): void {
    if (!this.drawing) {
      return;
    }
    const [x, y] = this.position(e);
    this.ctx.lineTo(x, y);
    this.ctx.stroke();
  }

  private end(): void {
    if (this.drawing) {
      this.drawing = false;
      this.strokeCount += 1;
      this.emit();
    }
  }

  clear(): void {
    this.ctx.fillStyle = "#ffffff";
    this.ctx.fillRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
    this.strokeCount = 0;
    this.emit();
  }

  get isEmpty(): boolean {
    return this.strokeCount === 0;
  }

  /** PNG bytes as base64 (no data-URL prefix); null while empty. */
  toPngBase64(): string | null {
    if (this.isEmpty) {
      return null;
    }
    return this.canvas.toDataURL("image/png").split(",", 2)[1] ?? null;
  }
}
