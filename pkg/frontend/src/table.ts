/** Comparison table of pinned configurations: validation and test columns. */

import { FrontRow } from "./api.js";

const CONFIG_KEYS = [
    "eta",
    "max_depth",
    "min_child_weight",
    "subsample",
    "colsample",
    "reg_lambda",
    "gamma",
    "nrounds",
    "thr",
];

export function configKey(row: FrontRow): string {
    return CONFIG_KEYS.map((k) => String(row[k])).join("|");
}

export class ComparisonTable {
    readonly root: HTMLElement;
    private measures: string[] = [];
    private pinned: FrontRow[] = [];
    private testRows = new Map<string, FrontRow>();

    constructor() {
        this.root = document.createElement("div");
        this.root.className = "comparison";
    }

    setMeasures(measures: string[]): void {
        this.measures = measures;
    }

    setTestRows(rows: FrontRow[]): void {
        this.testRows = new Map(rows.map((r) => [configKey(r), r]));
        this.redraw();
    }

    pin(row: FrontRow): void {
        const key = configKey(row);
        if (!this.pinned.some((r) => configKey(r) === key)) {
            this.pinned.push(row);
            this.redraw();
        }
    }

    clear(): void {
        this.pinned = [];
        this.redraw();
    }

    private redraw(): void {
        this.root.innerHTML = "";
        if (this.pinned.length === 0) return;
        const table = document.createElement("table");
        table.className = "pin-table";
        const head = document.createElement("tr");
        head.innerHTML =
            "<th>nrounds</th><th>thr</th>" +
            this.measures
                .map((m) => `<th>${m} (valid)</th><th>${m} (test)</th>`)
                .join("") +
            "<th>provenance</th>";
        table.appendChild(head);
        for (const row of this.pinned) {
            const test = this.testRows.get(configKey(row));
            const tr = document.createElement("tr");
            const cells: string[] = [String(row.nrounds), Number(row.thr).toFixed(2)];
            for (const m of this.measures) {
                cells.push((row[m] as number).toFixed(4));
                cells.push(test ? (test[m] as number).toFixed(4) : "…");
            }
            cells.push(String(row.provenance));
            tr.innerHTML = cells.map((c) => `<td>${c}</td>`).join("");
            table.appendChild(tr);
        }
        this.root.appendChild(table);
    }
}
