/** Typed client for the session REST API. */

export type SessionPhase = "idle" | "running" | "paused" | "done";

export interface SessionStatus {
    id: string;
    status: SessionPhase;
    iterations_done: number;
    iterations_allowed: number;
    k: number;
    measures: string[];
    box: [number, number][];
    archive_size: number;
    error?: string | null;
}

export interface FrontRow {
    provenance: string;
    iteration: number;
    nrounds: number;
    thr: number;
    [column: string]: number | string;
}

export interface Front {
    split: string;
    measures: string[];
    rows: FrontRow[];
}

export interface PathPoint {
    iteration: number;
    values: Record<string, number>;
    best: Record<string, number>;
}

export interface OptimizationPath {
    measures: string[];
    iterations: PathPoint[];
}

export interface ErrorBody {
    code?: string;
    message?: string;
    field?: string;
}

export class ApiError extends Error {
    constructor(readonly status: number, readonly body: ErrorBody) {
        super(body.message ?? `request failed with status ${status}`);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private readonly base: string = "",
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchFn(this.base + path, init);
        const text = await resp.text();
        const body = text ? JSON.parse(text) : null;
        if (!resp.ok) {
            throw new ApiError(resp.status, (body ?? {}) as ErrorBody);
        }
        return body as T;
    }

    listSessions(): Promise<SessionStatus[]> {
        return this.request("/sessions");
    }

    status(id: string): Promise<SessionStatus> {
        return this.request(`/sessions/${id}`);
    }

    front(id: string, split: "valid" | "test"): Promise<Front> {
        return this.request(`/sessions/${id}/front?split=${split}`);
    }

    path(id: string): Promise<OptimizationPath> {
        return this.request(`/sessions/${id}/path`);
    }

    setWeights(id: string, bounds: [number, number][]): Promise<{ box: [number, number][] }> {
        return this.request(`/sessions/${id}/weights`, {
            method: "PATCH",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ bounds }),
        });
    }

    startRun(id: string, iterations: number): Promise<{ status: string }> {
        return this.request(`/sessions/${id}/run`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ iterations }),
        });
    }

    pause(id: string): Promise<{ status: string }> {
        return this.request(`/sessions/${id}/pause`, { method: "POST" });
    }
}
