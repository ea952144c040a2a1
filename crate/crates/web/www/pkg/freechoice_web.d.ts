/* tslint:disable */
/* eslint-disable */

/**
 * Gibbs-versus-maximum distances with the fitted decay. See [`demo::gibbs_vs_max`].
 */
export function gibbs_vs_max(prior: Float64Array, source: Float64Array, alpha_max: number): string;

/**
 * Posterior and certainty-equivalent curve of a lottery. See [`demo::lottery`].
 */
export function lottery(p0: Float64Array, utility: Float64Array, beta: number, beta_span: number, points: number): string;

/**
 * Penalized expected maximum for a truncated Poisson source. See [`demo::satisficing`].
 */
export function satisficing(lambda: number, high: number, cost: number, m_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly gibbs_vs_max: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly lottery: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly satisficing: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
