/* tslint:disable */
/* eslint-disable */

export class OdeRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * First time the scheme runs out of money, if it does.
     */
    readonly collapseTime: number | undefined;
    /**
     * Matured, withdrawal-eligible value.
     */
    readonly matured: Float64Array;
    /**
     * Nominal rate; empty for the classical model.
     */
    readonly rate: Float64Array;
    readonly time: Float64Array;
    /**
     * Money held by the scheme.
     */
    readonly value: Float64Array;
}

export class PumpRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Sessions where the withdrawal had to be cut to keep the price positive.
     */
    readonly clamped: number;
    /**
     * Market hazard from cash concentration, per day.
     */
    readonly hazard: Float64Array;
    readonly logPrice: Float64Array;
    readonly time: Float64Array;
}

/**
 * Classical scheme paying the promised rate on matured money.
 */
export function classicalPonzi(promised: number, withdrawal: number, maturity: number, kind: string, exponent: number, first_year: number, horizon: number): OdeRun;

/**
 * One market path with a constant external flow (dollars per year,
 * negative for withdrawal).
 */
export function simulatePump(n_agents: number, m_active: number, greed: number, fear: number, years: number, flow_per_year: number, seed: bigint): PumpRun;

/**
 * Speculative scheme whose rate follows the net flow of money.
 */
export function speculativePonzi(impact: number, withdrawal: number, maturity: number, kind: string, exponent: number, first_year: number, horizon: number): OdeRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_oderun_free: (a: number, b: number) => void;
    readonly __wbg_pumprun_free: (a: number, b: number) => void;
    readonly classicalPonzi: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly oderun_collapseTime: (a: number) => [number, number];
    readonly oderun_matured: (a: number) => [number, number];
    readonly oderun_rate: (a: number) => [number, number];
    readonly oderun_time: (a: number) => [number, number];
    readonly oderun_value: (a: number) => [number, number];
    readonly pumprun_clamped: (a: number) => number;
    readonly pumprun_hazard: (a: number) => [number, number];
    readonly pumprun_logPrice: (a: number) => [number, number];
    readonly pumprun_time: (a: number) => [number, number];
    readonly simulatePump: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
    readonly speculativePonzi: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
