/** In-memory fixture server: canned responses plus a request log. */

import { Front, PathPoint, SessionStatus } from "../src/api.js";

export interface LoggedRequest {
    method: string;
    path: string;
    body: unknown;
}

const CONFIG_DEFAULTS = {
    eta: 0.1,
    max_depth: 4,
    min_child_weight: 1.0,
    subsample: 0.9,
    colsample: 0.9,
    reg_lambda: 1.0,
    gamma: 0.05,
};

export function frontRow(mmce: number, gap: number, nrounds = 50, thr = 0.5) {
    return {
        ...CONFIG_DEFAULTS,
        provenance: "full",
        iteration: 1,
        nrounds,
        thr,
        mmce,
        f1_gap: gap,
    };
}

export class FixtureServer {
    log: LoggedRequest[] = [];
    status: SessionStatus = {
        id: "s1",
        status: "paused",
        iterations_done: 20,
        iterations_allowed: 20,
        k: 2,
        measures: ["mmce", "f1_gap"],
        box: [
            [0, 1],
            [0, 1],
        ],
        archive_size: 120,
        error: null,
    };
    front: Front = { split: "valid", measures: ["mmce", "f1_gap"], rows: [] };
    testFront: Front = { split: "test", measures: ["mmce", "f1_gap"], rows: [] };
    path: PathPoint[] = [];

    fetch = async (input: string, init?: RequestInit): Promise<Response> => {
        const method = init?.method ?? "GET";
        const url = new URL(input, "http://fixture");
        const path = url.pathname + url.search;
        const body = init?.body ? JSON.parse(String(init.body)) : null;
        if (method !== "GET") {
            this.log.push({ method, path: url.pathname, body });
        }
        const respond = (payload: unknown, status = 200) =>
            new Response(JSON.stringify(payload), {
                status,
                headers: { "content-type": "application/json" },
            });

        if (method === "GET" && url.pathname === "/sessions") {
            return respond([this.status]);
        }
        if (method === "GET" && url.pathname === "/sessions/s1") {
            return respond(this.status);
        }
        if (method === "GET" && url.pathname === "/sessions/s1/front") {
            return respond(url.searchParams.get("split") === "test" ? this.testFront : this.front);
        }
        if (method === "GET" && url.pathname === "/sessions/s1/path") {
            return respond({ measures: this.status.measures, iterations: this.path });
        }
        if (method === "PATCH" && url.pathname === "/sessions/s1/weights") {
            if (this.status.status === "running") {
                return respond({ code: "running", message: "pause first" }, 409);
            }
            this.status = { ...this.status, box: body.bounds };
            return respond({ id: "s1", box: body.bounds });
        }
        if (method === "POST" && url.pathname === "/sessions/s1/run") {
            if (this.status.status === "running") {
                return respond({ code: "already_running", message: "busy" }, 409);
            }
            this.status = { ...this.status, status: "running" };
            return respond({ id: "s1", status: "running" }, 202);
        }
        if (method === "POST" && url.pathname === "/sessions/s1/pause") {
            this.status = { ...this.status, status: "paused" };
            return respond({ id: "s1", status: "paused" }, 202);
        }
        return respond({ code: "unknown", message: `no route ${method} ${path}` }, 404);
    };

    mutations(): LoggedRequest[] {
        return this.log.filter((r) => r.method !== "GET");
    }
}
