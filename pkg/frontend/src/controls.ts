/** Weight-box sliders, budget input, continue/pause buttons. */

export interface SteerRequest {
    w1lo: number;
    w1hi: number;
    iterations: number;
}

export class Controls {
    readonly root: HTMLElement;
    onsteer: (req: SteerRequest) => void = () => {};
    onpause: () => void = () => {};
    onfocuschange: (lo: number, hi: number) => void = () => {};

    private lo: HTMLInputElement;
    private hi: HTMLInputElement;
    private loLabel: HTMLElement;
    private hiLabel: HTMLElement;
    private budget: HTMLInputElement;
    private continueBtn: HTMLButtonElement;
    private pauseBtn: HTMLButtonElement;
    private message: HTMLElement;

    constructor() {
        this.root = document.createElement("div");
        this.root.className = "controls";
        this.root.innerHTML = `
          <div class="control-row">
            <span class="control-caption">trade-off weight w1</span>
            <label>min <input type="range" class="w1-lo" min="0" max="1" step="0.01" value="0"></label>
            <span class="w1-lo-value">0.00</span>
            <label>max <input type="range" class="w1-hi" min="0" max="1" step="0.01" value="1"></label>
            <span class="w1-hi-value">1.00</span>
          </div>
          <div class="control-row">
            <label>budget <input type="number" class="budget" min="1" step="1" value="20"></label>
            <button class="continue" type="button">Continue</button>
            <button class="pause" type="button">Pause</button>
            <span class="control-message" role="alert"></span>
          </div>`;
        this.lo = this.root.querySelector(".w1-lo") as HTMLInputElement;
        this.hi = this.root.querySelector(".w1-hi") as HTMLInputElement;
        this.loLabel = this.root.querySelector(".w1-lo-value") as HTMLElement;
        this.hiLabel = this.root.querySelector(".w1-hi-value") as HTMLElement;
        this.budget = this.root.querySelector(".budget") as HTMLInputElement;
        this.continueBtn = this.root.querySelector(".continue") as HTMLButtonElement;
        this.pauseBtn = this.root.querySelector(".pause") as HTMLButtonElement;
        this.message = this.root.querySelector(".control-message") as HTMLElement;

        const onSlide = () => {
            this.loLabel.textContent = Number(this.lo.value).toFixed(2);
            this.hiLabel.textContent = Number(this.hi.value).toFixed(2);
            this.setMessage(this.valid() ? "" : "min weight must not exceed max weight");
            if (this.valid()) this.onfocuschange(Number(this.lo.value), Number(this.hi.value));
        };
        this.lo.addEventListener("input", onSlide);
        this.hi.addEventListener("input", onSlide);
        this.continueBtn.addEventListener("click", () => this.submit());
        this.pauseBtn.addEventListener("click", () => this.onpause());
    }

    private valid(): boolean {
        return Number(this.lo.value) <= Number(this.hi.value);
    }

    private submit(): void {
        if (this.continueBtn.disabled) return;
        if (!this.valid()) {
            this.setMessage("min weight must not exceed max weight");
            return;
        }
        const iterations = Number(this.budget.value);
        if (!Number.isInteger(iterations) || iterations < 1) {
            this.setMessage("budget must be a positive whole number");
            return;
        }
        this.setMessage("");
        this.onsteer({
            w1lo: Number(this.lo.value),
            w1hi: Number(this.hi.value),
            iterations,
        });
    }

    setSliders(lo: number, hi: number): void {
        this.lo.value = String(lo);
        this.hi.value = String(hi);
        this.loLabel.textContent = lo.toFixed(2);
        this.hiLabel.textContent = hi.toFixed(2);
    }

    setBudget(iterations: number): void {
        this.budget.value = String(iterations);
    }

    /** Mutating controls lock while the optimizer is running. */
    setRunning(running: boolean): void {
        this.continueBtn.disabled = running;
        this.lo.disabled = running;
        this.hi.disabled = running;
        this.budget.disabled = running;
        this.pauseBtn.disabled = !running;
    }

    setMessage(text: string): void {
        this.message.textContent = text;
    }

    values(): { lo: number; hi: number; iterations: number } {
        return {
            lo: Number(this.lo.value),
            hi: Number(this.hi.value),
            iterations: Number(this.budget.value),
        };
    }
}
