// Typed client for the /v1 analysis API. The fetch function is injectable so
// tests can run fully mocked, and callers can point at a remote service.

export interface OperatingThresholds {
  eer: number;
  bpcer10: number;
  bpcer20: number;
}

export interface MethodInfo {
  method: string;
  config: Record<string, unknown>;
  thresholds: OperatingThresholds;
}

export interface ScoreEntry {
  method: string;
  score: number;
  eer_threshold: number;
  thresholds: OperatingThresholds;
}

export interface MapEntry {
  method: string;
  url: string;
  display_range: [number, number];
}

export interface AnalyzeResponse {
  id: string;
  scores: ScoreEntry[];
  maps: MapEntry[];
}

export interface HealthResponse {
  status: string;
  version: string;
}

export const MAX_UPLOAD_BYTES = 8 * 1024 * 1024;
const ACCEPTED_TYPES = ['image/png', 'image/jpeg'];

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
    this.name = 'ApiError';
  }
}

export class UploadRejected extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'UploadRejected';
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl = '',
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}${path}`);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      throw new ApiError(`GET ${path} failed (${resp.status})`, resp.status);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.getJson<HealthResponse>('/v1/health');
  }

  methods(): Promise<MethodInfo[]> {
    return this.getJson<MethodInfo[]>('/v1/methods');
  }

  /** Upload an image and collect per-method scores and rendered maps.
   *  Oversized or non-image files are rejected before any network call. */
  async analyze(file: Blob & { name?: string }, methods?: string[]): Promise<AnalyzeResponse> {
    if (file.size > MAX_UPLOAD_BYTES) {
      throw new UploadRejected(
        `file is ${(file.size / 1024 / 1024).toFixed(1)} MiB, the cap is ` +
          `${MAX_UPLOAD_BYTES / 1024 / 1024} MiB`,
      );
    }
    if (file.type && !ACCEPTED_TYPES.includes(file.type)) {
      throw new UploadRejected(`unsupported file type ${file.type}; use PNG or JPEG`);
    }
    const query = methods && methods.length ? `?methods=${methods.join(',')}` : '';
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}/v1/analyze${query}`, {
        method: 'POST',
        headers: { 'Content-Type': file.type || 'image/png' },
        body: file,
      });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = '';
      try {
        detail = ((await resp.json()) as { error?: string }).error ?? '';
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(`analysis failed (${resp.status}) ${detail}`.trim(), resp.status);
    }
    return (await resp.json()) as AnalyzeResponse;
  }

  mapUrl(relative: string): string {
    return `${this.baseUrl}${relative}`;
  }
}
