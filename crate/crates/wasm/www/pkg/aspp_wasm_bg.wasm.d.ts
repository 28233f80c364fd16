/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_oderun_free: (a: number, b: number) => void;
export const __wbg_pumprun_free: (a: number, b: number) => void;
export const classicalPonzi: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const oderun_collapseTime: (a: number) => [number, number];
export const oderun_matured: (a: number) => [number, number];
export const oderun_rate: (a: number) => [number, number];
export const oderun_time: (a: number) => [number, number];
export const oderun_value: (a: number) => [number, number];
export const pumprun_clamped: (a: number) => number;
export const pumprun_hazard: (a: number) => [number, number];
export const pumprun_logPrice: (a: number) => [number, number];
export const pumprun_time: (a: number) => [number, number];
export const simulatePump: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
export const speculativePonzi: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
