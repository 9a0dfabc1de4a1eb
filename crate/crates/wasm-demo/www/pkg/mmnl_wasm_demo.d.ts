/* tslint:disable */
/* eslint-disable */

/**
 * Choice probabilities and log-sum-exp for a utility vector, as JSON.
 */
export function choiceProbabilities(utilities: Float64Array): string;

/**
 * Histogram of PG(1, c) draws with exact and sample moments, as JSON.
 */
export function pgHistogram(c: number, draws: number, bins: number, seed: number): string;

/**
 * Per-sweep PG sampler monitors, as JSON.
 */
export function pgTrace(n: number, iterations: number, deferred: boolean, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly choiceProbabilities: (a: number, b: number) => [number, number, number, number];
    readonly pgHistogram: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly pgTrace: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
