/** Steering console: watch the front form, pause, narrow weights, continue. */

import { ApiClient, ApiError, Front, PathPoint, SessionStatus } from "./api.js";
import { Controls, SteerRequest } from "./controls.js";
import { PathView } from "./pathview.js";
import { ScatterView } from "./scatter.js";
import { ComparisonTable } from "./table.js";

export class SteeringApp {
    readonly root: HTMLElement;
    readonly scatter = new ScatterView();
    readonly pathView = new PathView();
    readonly controls = new Controls();
    readonly table = new ComparisonTable();

    status: SessionStatus | null = null;
    front: Front | null = null;
    path: PathPoint[] = [];

    private sessionId: string | null = null;
    private picker: HTMLSelectElement;
    private statusLine: HTMLElement;
    private banner: HTMLElement;
    private lastArchiveSize = -1;
    private polling = false;
    private timer: ReturnType<typeof setInterval> | null = null;
    // user actions run one at a time, in order
    private queue: Promise<void> = Promise.resolve();

    constructor(root: HTMLElement, private readonly api: ApiClient) {
        this.root = root;
        root.innerHTML = `
          <header>
            <h1>axmc steering console</h1>
            <label>session <select class="session-picker"></select></label>
            <span class="status-line"></span>
          </header>
          <div class="banner" hidden></div>`;
        this.picker = root.querySelector(".session-picker") as HTMLSelectElement;
        this.statusLine = root.querySelector(".status-line") as HTMLElement;
        this.banner = root.querySelector(".banner") as HTMLElement;

        const main = document.createElement("main");
        const left = document.createElement("section");
        left.className = "pane front-pane";
        left.appendChild(this.scatter.root);
        left.appendChild(this.controls.root);
        const right = document.createElement("section");
        right.className = "pane path-pane";
        right.appendChild(this.pathView.root);
        right.appendChild(this.table.root);
        main.appendChild(left);
        main.appendChild(right);
        root.appendChild(main);

        this.picker.addEventListener("change", () => {
            this.selectSession(this.picker.value);
        });
        this.controls.onsteer = (req) => this.steer(req);
        this.controls.onpause = () => this.pause();
        this.controls.onfocuschange = (lo, hi) => this.scatter.setFocus(lo, hi);
        this.scatter.onpin = (row) => this.table.pin(row);
    }

    async init(): Promise<void> {
        const sessions = await this.api.listSessions();
        this.picker.innerHTML = sessions
            .map((s) => `<option value="${s.id}">${s.id} (${s.status})</option>`)
            .join("");
        if (sessions.length > 0) {
            await this.selectSession(sessions[0].id);
        }
    }

    async selectSession(id: string): Promise<void> {
        this.sessionId = id;
        this.lastArchiveSize = -1;
        this.table.clear();
        await this.poll();
    }

    startPolling(intervalMs = 1000): void {
        if (this.timer !== null) return;
        this.timer = setInterval(() => void this.poll(), intervalMs);
    }

    stopPolling(): void {
        if (this.timer !== null) clearInterval(this.timer);
        this.timer = null;
    }

    /** One poll pass; at most one in flight at a time. */
    async poll(): Promise<void> {
        if (this.polling || this.sessionId === null) return;
        this.polling = true;
        try {
            const status = await this.api.status(this.sessionId);
            this.status = status;
            this.statusLine.textContent =
                `${status.status} — iteration ${status.iterations_done}/${status.iterations_allowed}` +
                ` — ${status.archive_size} records`;
            this.controls.setRunning(status.status === "running");
            if (status.archive_size !== this.lastArchiveSize) {
                const [front, path] = await Promise.all([
                    this.api.front(this.sessionId, "valid"),
                    this.api.path(this.sessionId),
                ]);
                this.front = front;
                this.path = path.iterations;
                this.lastArchiveSize = status.archive_size;
                this.table.setMeasures(front.measures);
                this.scatter.update(front, this.path);
                this.pathView.update(front.measures, this.path);
                if (status.status !== "running" && front.rows.length > 0) {
                    const test = await this.api.front(this.sessionId, "test");
                    this.table.setTestRows(test.rows);
                }
            }
            this.banner.hidden = true;
        } catch (err) {
            // keep the last rendered view; tell the operator the data is stale
            this.banner.textContent = `connection problem, showing stale data (${String(err)})`;
            this.banner.hidden = false;
        } finally {
            this.polling = false;
        }
    }

    /** Narrow the weight box, then continue: PATCH first, POST run second. */
    steer(req: SteerRequest): Promise<void> {
        this.queue = this.queue.then(async () => {
            if (this.sessionId === null) return;
            if (this.status?.status === "running") return; // no mutations mid-run
            try {
                await this.api.setWeights(this.sessionId, [
                    [req.w1lo, req.w1hi],
                    [0, 1],
                ]);
                await this.api.startRun(this.sessionId, req.iterations);
                if (this.status) {
                    this.status = { ...this.status, status: "running" };
                }
                this.controls.setRunning(true);
                this.statusLine.textContent = "running";
            } catch (err) {
                this.controls.setMessage(
                    err instanceof ApiError ? err.message : String(err),
                );
            }
        });
        return this.queue;
    }

    pause(): Promise<void> {
        this.queue = this.queue.then(async () => {
            if (this.sessionId === null) return;
            try {
                await this.api.pause(this.sessionId);
            } catch (err) {
                this.controls.setMessage(String(err));
            }
        });
        return this.queue;
    }
}

export function mount(root: HTMLElement, base = ""): SteeringApp {
    const app = new SteeringApp(root, new ApiClient(base));
    void app.init().then(() => app.startPolling());
    return app;
}
