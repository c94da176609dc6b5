import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SteeringApp } from "../src/app.js";
import { FixtureServer, frontRow } from "./fixture.js";

function makeApp(server: FixtureServer): SteeringApp {
    const root = document.createElement("div");
    document.body.innerHTML = "";
    document.body.appendChild(root);
    return new SteeringApp(root, new ApiClient("", server.fetch));
}

function seedFourPointFixture(server: FixtureServer): void {
    // archive of four evaluations, three on the server-reported front
    server.front.rows = [frontRow(0.1, 0.9), frontRow(0.9, 0.1), frontRow(0.5, 0.5)];
    server.path = [
        { iteration: 1, values: { mmce: 0.1, f1_gap: 0.9 }, best: { mmce: 0.1, f1_gap: 0.9 } },
        { iteration: 2, values: { mmce: 0.9, f1_gap: 0.1 }, best: { mmce: 0.1, f1_gap: 0.1 } },
        { iteration: 3, values: { mmce: 0.5, f1_gap: 0.5 }, best: { mmce: 0.1, f1_gap: 0.1 } },
        { iteration: 4, values: { mmce: 0.6, f1_gap: 0.6 }, best: { mmce: 0.1, f1_gap: 0.1 } },
    ];
}

describe("front rendering", () => {
    let server: FixtureServer;

    beforeEach(() => {
        server = new FixtureServer();
    });

    it("highlights exactly the server-reported non-dominated points", async () => {
        seedFourPointFixture(server);
        const app = makeApp(server);
        await app.init();
        const highlighted = app.root.querySelectorAll(".front-point");
        const dominated = app.root.querySelectorAll(".dominated-point");
        expect(highlighted.length).toBe(3);
        expect(dominated.length).toBe(1);
    });

    it("scatter matrix (k>2): client-side dominance equals server front membership", async () => {
        server.status.measures = ["mmce", "f1_gap", "sparsity"];
        server.status.k = 3;
        server.front.measures = ["mmce", "f1_gap", "sparsity"];
        server.front.rows = [
            { ...frontRow(0.1, 0.9), sparsity: 0.8 },
            { ...frontRow(0.9, 0.1), sparsity: 0.7 },
            { ...frontRow(0.5, 0.5), sparsity: 0.2 },
        ];
        server.path = [
            { iteration: 1, values: { mmce: 0.1, f1_gap: 0.9, sparsity: 0.8 }, best: { mmce: 0.1, f1_gap: 0.9, sparsity: 0.8 } },
            { iteration: 2, values: { mmce: 0.6, f1_gap: 0.6, sparsity: 0.9 }, best: { mmce: 0.1, f1_gap: 0.6, sparsity: 0.8 } },
        ];
        const app = makeApp(server);
        await app.init();
        const panels = app.root.querySelectorAll(".scatter-matrix svg");
        expect(panels.length).toBe(3); // pairwise panels for k = 3
        // per panel: the three server rows highlighted, the dominated one red
        expect(app.root.querySelectorAll(".front-point").length).toBe(3 * 3);
        expect(app.root.querySelectorAll(".dominated-point").length).toBe(1 * 3);
    });

    it("shows an empty-state prompt without evaluations", async () => {
        server.status.archive_size = 0;
        const app = makeApp(server);
        await app.init();
        expect(app.root.querySelector(".empty-state")).not.toBeNull();
    });

    it("re-shades the focus region without refetching", async () => {
        seedFourPointFixture(server);
        const app = makeApp(server);
        await app.init();
        const fetches = server.log.length; // only mutations are logged anyway
        const before = app.root.querySelector(".focus-region")!.getAttribute("width");
        app.scatter.setFocus(0.45, 0.55);
        const after = app.root.querySelector(".focus-region")!.getAttribute("width");
        expect(server.log.length).toBe(fetches);
        expect(before).not.toBeNull();
        expect(after).not.toBeNull();
    });

    it("keeps the last view and shows a banner on fetch failure", async () => {
        seedFourPointFixture(server);
        const app = makeApp(server);
        await app.init();
        Reflect.set(
            app,
            "api",
            new ApiClient("", async () => {
                throw new Error("network down");
            }),
        );
        await app.poll();
        expect(app.root.querySelectorAll(".front-point").length).toBe(3);
        const banner = app.root.querySelector(".banner") as HTMLElement;
        expect(banner.hidden).toBe(false);
        expect(banner.textContent).toContain("stale");
    });

    it("pins a clicked front point into the comparison table", async () => {
        seedFourPointFixture(server);
        server.testFront.rows = [frontRow(0.15, 0.85), frontRow(0.92, 0.12), frontRow(0.55, 0.52)];
        const app = makeApp(server);
        await app.init();
        const point = app.root.querySelector(".front-point") as SVGCircleElement;
        point.dispatchEvent(new MouseEvent("click"));
        const cells = app.root.querySelectorAll(".pin-table tr");
        expect(cells.length).toBe(2); // header plus one pinned row
    });
});

describe("optimization path view", () => {
    it("renders one dot per evaluation and a monotone best line", async () => {
        const server = new FixtureServer();
        seedFourPointFixture(server);
        const app = makeApp(server);
        await app.init();
        const dots = app.root.querySelectorAll(".path-series-mmce circle");
        expect(dots.length).toBe(4);
        const best = app.root.querySelector(".best-line-mmce")!;
        const ys = best
            .getAttribute("points")!
            .split(" ")
            .map((pair) => Number(pair.split(",")[1]));
        for (let i = 1; i < ys.length; i++) {
            expect(ys[i]).toBeGreaterThanOrEqual(ys[i - 1] - 1e-9); // screen y grows as value falls
        }
    });

    it("toggling a measure hides only its series", async () => {
        const server = new FixtureServer();
        seedFourPointFixture(server);
        const app = makeApp(server);
        await app.init();
        const checkbox = app.root.querySelector(
            'input[data-measure="mmce"]',
        ) as HTMLInputElement;
        checkbox.checked = false;
        checkbox.dispatchEvent(new Event("change"));
        expect(app.root.querySelector(".path-series-mmce")).toBeNull();
        expect(app.root.querySelector(".path-series-f1_gap")).not.toBeNull();
    });
});

describe("steering", () => {
    let server: FixtureServer;

    beforeEach(() => {
        server = new FixtureServer();
        seedFourPointFixture(server);
    });

    it("issues PATCH weights then POST run, then shows running", async () => {
        const app = makeApp(server);
        await app.init();
        app.controls.setSliders(0.1, 0.9);
        app.controls.setBudget(50);
        (app.root.querySelector(".continue") as HTMLButtonElement).click();
        await Reflect.get(app, "queue"); // drain the serialized command queue
        const mutations = server.mutations();
        expect(mutations.length).toBe(2);
        expect(mutations[0].method).toBe("PATCH");
        expect(mutations[0].path).toBe("/sessions/s1/weights");
        expect(mutations[0].body).toEqual({ bounds: [[0.1, 0.9], [0, 1]] });
        expect(mutations[1].method).toBe("POST");
        expect(mutations[1].path).toBe("/sessions/s1/run");
        expect(mutations[1].body).toEqual({ iterations: 50 });
        expect(app.status?.status).toBe("running");
        expect((app.root.querySelector(".continue") as HTMLButtonElement).disabled).toBe(true);
    });

    it("emits no mutating request while running", async () => {
        server.status.status = "running";
        const app = makeApp(server);
        await app.init();
        expect((app.root.querySelector(".continue") as HTMLButtonElement).disabled).toBe(true);
        (app.root.querySelector(".continue") as HTMLButtonElement).click();
        await app.steer({ w1lo: 0.1, w1hi: 0.9, iterations: 50 });
        expect(server.mutations()).toEqual([]);
    });

    it("rejects an infeasible slider combination client-side", async () => {
        const app = makeApp(server);
        await app.init();
        app.controls.setSliders(0.9, 0.1);
        (app.root.querySelector(".continue") as HTMLButtonElement).click();
        await new Promise((resolve) => setTimeout(resolve, 0));
        expect(server.mutations()).toEqual([]);
        const message = app.root.querySelector(".control-message") as HTMLElement;
        expect(message.textContent).toContain("min weight");
    });

    it("surfaces a server 409 inline", async () => {
        const app = makeApp(server);
        await app.init();
        server.status.status = "running"; // server-side state changed between polls
        await app.steer({ w1lo: 0.1, w1hi: 0.9, iterations: 50 });
        const message = app.root.querySelector(".control-message") as HTMLElement;
        expect(message.textContent).not.toBe("");
    });

    it("pause button posts pause", async () => {
        server.status.status = "running";
        const app = makeApp(server);
        await app.init();
        (app.root.querySelector(".pause") as HTMLButtonElement).click();
        await app.pause();
        const pauses = server.mutations().filter((r) => r.path === "/sessions/s1/pause");
        expect(pauses.length).toBeGreaterThanOrEqual(1);
    });

    it("polls with a single in-flight guard", async () => {
        const app = makeApp(server);
        await app.init();
        const first = app.poll();
        const second = app.poll(); // coalesced: returns without a second request
        await Promise.all([first, second]);
        expect(app.status).not.toBeNull();
    });
});
