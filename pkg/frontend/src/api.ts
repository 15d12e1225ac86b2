/**
 * Typed client over the phydcm service endpoints.
 *
 * The viewer holds no diagnostic logic: every number it displays comes
 * verbatim from one of these responses.
 */

export type Plane = "axial" | "coronal" | "sagittal";

export interface ModelEntry {
  scan_type: string;
  classes: string[];
  loaded: boolean;
}

export interface StudyEntry {
  study_id: string;
  source_dir: string;
  dims: [number, number, number]; // (nx, ny, nz)
  spacing: [number, number, number];
  scan_type_hint: string | null;
}

export interface SlicePayload {
  width: number;
  height: number;
  pixels: string; // base64 raw 8-bit grayscale, row-major
}

export type Triple = [number, number, number]; // (slice index, row, col)

export interface CrosshairTriples {
  axial: Triple;
  coronal: Triple;
  sagittal: Triple;
}

export interface QualityMetrics {
  mean_intensity: number;
  std_intensity: number;
  saturated_fraction: number;
}

export interface DiagnosticRecord {
  record_id: string;
  timestamp: string;
  patient_id: string | null;
  patient_name: string | null;
  scan_type: string;
  source_path: string;
  predicted_class: string;
  confidence: number;
  probabilities: Record<string, number>;
  quality: QualityMetrics;
  engine_version: string;
}

export interface DiagnoseRequest {
  study_id?: string;
  path?: string;
  plane?: Plane;
  index?: number;
  scan_type: string;
  patient_id?: string;
  patient_name?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  try {
    const body = (await resp.json()) as { error?: string; message?: string };
    return new ApiError(resp.status, body.error ?? "error", body.message ?? resp.statusText);
  } catch {
    return new ApiError(resp.status, "error", resp.statusText);
  }
}

export class PhydcmClient {
  constructor(readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  models(scanType?: string): Promise<ModelEntry[]> {
    const query = scanType ? `?scan_type=${encodeURIComponent(scanType)}` : "";
    return this.getJson(`/api/models${query}`);
  }

  studies(): Promise<StudyEntry[]> {
    return this.getJson("/api/studies");
  }

  slice(
    studyId: string,
    plane: Plane,
    index: number,
    window?: number,
    level?: number,
  ): Promise<SlicePayload> {
    const params = new URLSearchParams({ plane, index: String(index) });
    if (window !== undefined) params.set("window", String(window));
    if (level !== undefined) params.set("level", String(level));
    return this.getJson(`/api/studies/${encodeURIComponent(studyId)}/slice?${params}`);
  }

  crosshair(studyId: string, x: number, y: number, z: number): Promise<CrosshairTriples> {
    return this.postJson("/api/crosshair", { study_id: studyId, x, y, z });
  }

  diagnose(request: DiagnoseRequest): Promise<DiagnosticRecord> {
    return this.postJson("/api/diagnose", request);
  }

  history(): Promise<DiagnosticRecord[]> {
    return this.getJson("/api/history");
  }

  historyExportUrl(): string {
    return `${this.baseUrl}/api/history/export?format=csv`;
  }

  /** The CSV text the Export button hands to the browser download. */
  async exportCsv(): Promise<string> {
    const resp = await fetch(this.historyExportUrl());
    if (!resp.ok) throw await parseError(resp);
    return resp.text();
  }

  async clearHistory(): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/history`, { method: "DELETE" });
    if (!resp.ok) throw await parseError(resp);
  }

  async log(): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/api/log`);
    if (!resp.ok) throw await parseError(resp);
    return resp.text();
  }
}

/** Row strings for the results table, verbatim from a service record. */
export function recordRow(record: DiagnosticRecord, classes: string[]): string[] {
  return [
    record.predicted_class,
    record.confidence.toFixed(2),
    ...classes.map((c) => (record.probabilities[c] ?? 0).toFixed(4)),
  ];
}
