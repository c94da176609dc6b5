/** Optimization path: per-evaluation value and running best per measure. */

import { PathPoint } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 460;
const H = 240;
const PAD = 40;
const COLORS = ["#2266cc", "#cc4422", "#228844", "#886622", "#663388"];

export class PathView {
    readonly root: HTMLElement;
    private measures: string[] = [];
    private points: PathPoint[] = [];
    private hidden = new Set<string>();

    constructor() {
        this.root = document.createElement("div");
        this.root.className = "path-view";
    }

    update(measures: string[], points: PathPoint[]): void {
        this.measures = measures;
        this.points = points;
        this.redraw();
    }

    toggle(measure: string, visible: boolean): void {
        if (visible) this.hidden.delete(measure);
        else this.hidden.add(measure);
        this.redraw();
    }

    private redraw(): void {
        this.root.innerHTML = "";
        if (this.points.length === 0) {
            return;
        }
        const toolbar = document.createElement("div");
        toolbar.className = "path-toolbar";
        this.measures.forEach((m, i) => {
            const label = document.createElement("label");
            label.style.color = COLORS[i % COLORS.length];
            const cb = document.createElement("input");
            cb.type = "checkbox";
            cb.checked = !this.hidden.has(m);
            cb.dataset.measure = m;
            cb.addEventListener("change", () => this.toggle(m, cb.checked));
            label.appendChild(cb);
            label.appendChild(document.createTextNode(m));
            toolbar.appendChild(label);
        });
        this.root.appendChild(toolbar);

        const svg = document.createElementNS(SVG_NS, "svg");
        svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
        svg.setAttribute("class", "path-chart");
        const visible = this.measures.filter((m) => !this.hidden.has(m));
        const all: number[] = [];
        for (const m of visible) {
            for (const p of this.points) all.push(p.values[m]);
        }
        if (all.length === 0) {
            this.root.appendChild(svg);
            return;
        }
        const lo = Math.min(...all);
        const hi = Math.max(...all);
        const span = hi > lo ? hi - lo : 1;
        const sx = (i: number) =>
            PAD + (this.points.length > 1 ? (i / (this.points.length - 1)) * (W - 2 * PAD) : 0);
        const sy = (v: number) => H - PAD - ((v - lo) / span) * (H - 2 * PAD);

        visible.forEach((m) => {
            const color = COLORS[this.measures.indexOf(m) % COLORS.length];
            const dots = document.createElementNS(SVG_NS, "g");
            dots.setAttribute("class", `path-series path-series-${m}`);
            this.points.forEach((p, i) => {
                const c = document.createElementNS(SVG_NS, "circle");
                c.setAttribute("cx", String(sx(i)));
                c.setAttribute("cy", String(sy(p.values[m])));
                c.setAttribute("r", "2.5");
                c.setAttribute("fill", color);
                dots.appendChild(c);
            });
            svg.appendChild(dots);
            const best = document.createElementNS(SVG_NS, "polyline");
            best.setAttribute("class", `best-line best-line-${m}`);
            best.setAttribute("fill", "none");
            best.setAttribute("stroke", color);
            best.setAttribute(
                "points",
                this.points.map((p, i) => `${sx(i)},${sy(p.best[m])}`).join(" "),
            );
            svg.appendChild(best);
        });
        this.root.appendChild(svg);
    }
}
