/**
 * Results grid: preview tiles shaded green in proportion to their score;
 * provisional order during RESULT_BATCH streaming, server order after
 * QUERY_END.
 */

import type { ApiClient } from "./api.js";
import type { BatchRow, ResultRow } from "./protocol.js";
import { relevanceColor } from "./shading.js";

export interface TileActions {
  onMoreLikeThis: (segmentId: string) => void;
}

export class ResultsGrid {
  rendered: string[] = [];

  constructor(private container: HTMLElement, private api: ApiClient,
              private actions: TileActions) {}

  showProvisional(rows: BatchRow[]): void {
    this.render(rows.map((r) => ({
      segment_id: r.segment_id,
      object_id: r.segment_id.split(":", 1)[0],
      score: r.score,
      per_category_scores: {},
    })), true);
  }

  showFinal(rows: ResultRow[]): void {
    this.render(rows, false);
  }

  private render(rows: ResultRow[], provisional: boolean): void {
    this.container.textContent = "";
    this.container.classList.toggle("provisional", provisional);
    this.rendered = rows.map((r) => r.segment_id);
    for (const row of rows) {
      const tile = document.createElement("figure");
      tile.className = "tile";
      tile.style.backgroundColor = relevanceColor(row.score);

      const img = document.createElement("img");
      img.loading = "lazy";
      img.src = this.api.previewUrl(row.segment_id);
      img.alt = row.segment_id;
      tile.appendChild(img);

      const caption = document.createElement("figcaption");
      const score = document.createElement("span");
      score.className = "score";
      score.textContent = row.score.toFixed(3);
      caption.appendChild(score);

      const breakdown = Object.entries(row.per_category_scores)
        .map(([category, value]) => `${category}: ${value.toFixed(3)}`)
        .join("\n");
      tile.title = `${row.segment_id}\n${breakdown}`;

      const mlt = document.createElement("button");
      mlt.textContent = "more like this";
      mlt.addEventListener("click", () => this.actions.onMoreLikeThis(row.segment_id));
      caption.appendChild(mlt);

      tile.appendChild(caption);
      this.container.appendChild(tile);
    }
    if (rows.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = provisional ? "searching..." : "no results";
      this.container.appendChild(empty);
    }
  }
}
