/** Objective-space scatter: the forming Pareto front plus dominated points. */

import { Front, FrontRow, PathPoint } from "./api.js";
import { focusRange, nonDominatedMask } from "./pareto.js";

export interface ScatterPoint {
    values: number[];
    front: boolean;
    label: string;
    row: FrontRow | null;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 460;
const H = 360;
const PAD = 44;

function measureValues(row: FrontRow, measures: string[]): number[] {
    return measures.map((m) => row[m] as number);
}

/** Front rows plus every evaluated path point that is not on the front. */
export function assemblePoints(front: Front, path: PathPoint[]): ScatterPoint[] {
    const points: ScatterPoint[] = front.rows.map((row) => ({
        values: measureValues(row, front.measures),
        front: true,
        label:
            `${front.measures.map((m) => `${m}=${(row[m] as number).toFixed(4)}`).join(" ")}` +
            ` | nrounds=${row.nrounds} thr=${row.thr} (${row.provenance})`,
        row,
    }));
    const frontKeys = new Set(points.map((p) => p.values.join(",")));
    for (const entry of path) {
        const values = front.measures.map((m) => entry.values[m]);
        if (!frontKeys.has(values.join(","))) {
            points.push({
                values,
                front: false,
                label: `iteration ${entry.iteration}: ${front.measures
                    .map((m) => `${m}=${entry.values[m].toFixed(4)}`)
                    .join(" ")}`,
                row: null,
            });
        }
    }
    return points;
}

export class ScatterView {
    readonly root: HTMLElement;
    onpin: (row: FrontRow) => void = () => {};
    private measures: string[] = [];
    private points: ScatterPoint[] = [];
    private box: [number, number] = [0, 1];

    constructor() {
        this.root = document.createElement("div");
        this.root.className = "scatter-view";
    }

    update(front: Front, path: PathPoint[]): void {
        this.measures = front.measures;
        this.points = assemblePoints(front, path);
        this.redraw();
    }

    /** Re-shade the focused region only; no data refetch. */
    setFocus(w1lo: number, w1hi: number): void {
        this.box = [w1lo, w1hi];
        this.redraw();
    }

    private redraw(): void {
        this.root.innerHTML = "";
        if (this.points.length === 0) {
            const empty = document.createElement("p");
            empty.className = "empty-state";
            empty.textContent = "No evaluations yet. Grant a budget and press Continue.";
            this.root.appendChild(empty);
            return;
        }
        if (this.measures.length === 2) {
            this.root.appendChild(this.panel(0, 1, true));
        } else {
            // pairwise scatter matrix for k > 2
            const grid = document.createElement("div");
            grid.className = "scatter-matrix";
            const mask = nonDominatedMask(this.points.map((p) => p.values));
            this.points.forEach((p, i) => (p.front = mask[i]));
            for (let i = 0; i < this.measures.length; i++) {
                for (let j = 0; j < this.measures.length; j++) {
                    if (i < j) grid.appendChild(this.panel(i, j, false));
                }
            }
            this.root.appendChild(grid);
        }
    }

    private panel(ix: number, iy: number, shadeFocus: boolean): SVGSVGElement {
        const svg = document.createElementNS(SVG_NS, "svg");
        svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
        svg.setAttribute("class", "scatter");
        const xs = this.points.map((p) => p.values[ix]);
        const ys = this.points.map((p) => p.values[iy]);
        const [x0, x1] = pad(Math.min(...xs), Math.max(...xs));
        const [y0, y1] = pad(Math.min(...ys), Math.max(...ys));
        const sx = (v: number) => PAD + ((v - x0) / (x1 - x0)) * (W - 2 * PAD);
        const sy = (v: number) => H - PAD - ((v - y0) / (y1 - y0)) * (H - 2 * PAD);

        if (shadeFocus) {
            const frontValues = this.points.filter((p) => p.front).map((p) => p.values);
            const range = focusRange(frontValues, this.box[0], this.box[1]);
            if (range) {
                const rect = document.createElementNS(SVG_NS, "rect");
                rect.setAttribute("class", "focus-region");
                rect.setAttribute("x", String(sx(range[0]) - 6));
                rect.setAttribute("width", String(Math.max(sx(range[1]) - sx(range[0]) + 12, 12)));
                rect.setAttribute("y", String(PAD / 2));
                rect.setAttribute("height", String(H - PAD - PAD / 2));
                svg.appendChild(rect);
            }
        }

        svg.appendChild(this.axis(sx(x0), sy(y0), sx(x1), sy(y0)));
        svg.appendChild(this.axis(sx(x0), sy(y0), sx(x0), sy(y1)));
        svg.appendChild(this.axisLabel(this.measures[ix], W / 2, H - 8, 0));
        svg.appendChild(this.axisLabel(this.measures[iy], 12, H / 2, -90));

        for (const p of this.points) {
            const c = document.createElementNS(SVG_NS, "circle");
            c.setAttribute("cx", String(sx(p.values[ix])));
            c.setAttribute("cy", String(sy(p.values[iy])));
            c.setAttribute("r", p.front ? "5" : "3.5");
            c.setAttribute("class", p.front ? "front-point" : "dominated-point");
            const title = document.createElementNS(SVG_NS, "title");
            title.textContent = p.label;
            c.appendChild(title);
            if (p.row) {
                const row = p.row;
                c.addEventListener("click", () => this.onpin(row));
            }
            svg.appendChild(c);
        }
        return svg;
    }

    private axis(x1: number, y1: number, x2: number, y2: number): SVGLineElement {
        const line = document.createElementNS(SVG_NS, "line");
        line.setAttribute("x1", String(x1));
        line.setAttribute("y1", String(y1));
        line.setAttribute("x2", String(x2));
        line.setAttribute("y2", String(y2));
        line.setAttribute("class", "axis");
        return line;
    }

    private axisLabel(text: string, x: number, y: number, rotate: number): SVGTextElement {
        const el = document.createElementNS(SVG_NS, "text");
        el.setAttribute("x", String(x));
        el.setAttribute("y", String(y));
        el.setAttribute("class", "axis-label");
        if (rotate) el.setAttribute("transform", `rotate(${rotate} ${x} ${y})`);
        el.textContent = text;
        return el;
    }
}

function pad(lo: number, hi: number): [number, number] {
    if (!(hi > lo)) return [lo - 0.5, lo + 0.5];
    const margin = (hi - lo) * 0.08;
    return [lo - margin, hi + margin];
}
