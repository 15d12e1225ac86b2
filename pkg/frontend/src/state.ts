/**
 * Viewer state: three orthogonal viewports plus the crosshair link.
 *
 * Pure logic, no DOM.  Slice requests carry a per-viewport generation
 * counter so stale responses are discarded; crosshair application sets
 * the three viewports' (index, row, col) exactly to one service
 * response's triples.
 */

import type { CrosshairTriples, Plane, Triple } from "./api.js";

export const PLANES: Plane[] = ["axial", "coronal", "sagittal"];

export interface Crosshair3D {
  x: number;
  y: number;
  z: number;
}

export interface ViewportState {
  plane: Plane;
  index: number;
  crosshair: { row: number; col: number } | null;
  generation: number;
}

export class ViewerController {
  viewports: Record<Plane, ViewportState>;
  activePlane: Plane = "axial";
  dims: [number, number, number] = [1, 1, 1];
  window: number | null = null;
  level: number | null = null;

  constructor() {
    this.viewports = {
      axial: { plane: "axial", index: 0, crosshair: null, generation: 0 },
      coronal: { plane: "coronal", index: 0, crosshair: null, generation: 0 },
      sagittal: { plane: "sagittal", index: 0, crosshair: null, generation: 0 },
    };
  }

  /** Extent of a plane's slice index for the bound volume. */
  planeExtent(plane: Plane): number {
    const [nx, ny, nz] = this.dims;
    return plane === "axial" ? nz : plane === "coronal" ? ny : nx;
  }

  /** Bind a study: middle slice everywhere, crosshairs cleared. */
  setStudy(dims: [number, number, number]): void {
    this.dims = dims;
    for (const plane of PLANES) {
      const vp = this.viewports[plane];
      vp.index = Math.floor(this.planeExtent(plane) / 2);
      vp.crosshair = null;
      vp.generation += 1;
    }
  }

  setActive(plane: Plane): void {
    this.activePlane = plane;
  }

  /** Clamped absolute slide (coarse navigation). */
  setIndex(plane: Plane, index: number): number {
    const clamped = Math.min(Math.max(index, 0), this.planeExtent(plane) - 1);
    const vp = this.viewports[plane];
    if (clamped !== vp.index) {
      vp.index = clamped;
      vp.generation += 1;
    }
    return clamped;
  }

  /** Fine navigation: arrow keys step the active viewport by +-1. */
  stepIndex(delta: number): number {
    return this.setIndex(this.activePlane, this.viewports[this.activePlane].index + delta);
  }

  /** Voxel coordinates of a click at (row, col) on a plane's current slice. */
  pointFromClick(plane: Plane, row: number, col: number): Crosshair3D {
    const index = this.viewports[plane].index;
    if (plane === "axial") return { x: col, y: row, z: index };
    if (plane === "coronal") return { x: col, y: index, z: row };
    return { x: index, y: col, z: row };
  }

  inBounds(p: Crosshair3D): boolean {
    const [nx, ny, nz] = this.dims;
    return p.x >= 0 && p.x < nx && p.y >= 0 && p.y < ny && p.z >= 0 && p.z < nz;
  }

  /**
   * Apply one crosshair response: every viewport jumps to the returned
   * slice index and draws the crosshair at the returned (row, col).
   */
  applyCrosshair(triples: CrosshairTriples): void {
    for (const plane of PLANES) {
      const [index, row, col] = triples[plane] as Triple;
      const vp = this.viewports[plane];
      if (vp.index !== index) {
        vp.index = index;
        vp.generation += 1;
      }
      vp.crosshair = { row, col };
    }
  }

  /** Window/level changes keep the crosshair (spec: persists across W/L). */
  setWindowLevel(window: number | null, level: number | null): void {
    this.window = window;
    this.level = level;
    for (const plane of PLANES) this.viewports[plane].generation += 1;
  }

  /** Stamp a request; compare against the viewport's counter on arrival. */
  generationOf(plane: Plane): number {
    return this.viewports[plane].generation;
  }

  isCurrent(plane: Plane, generation: number): boolean {
    return this.viewports[plane].generation === generation;
  }
}
