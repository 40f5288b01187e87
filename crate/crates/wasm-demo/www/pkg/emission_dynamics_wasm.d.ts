/* tslint:disable */
/* eslint-disable */

export class SampleFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[a_l, a_r, b_l, b_r, m]`
     */
    params(): Float64Array;
    samples(): Float64Array;
    std_errors(): Float64Array;
    readonly log_likelihood: number;
}

export class ScalingDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    centers(): Float64Array;
    sigmas(): Float64Array;
    readonly beta: number;
    readonly beta_se: number;
}

export function densityGrid(a_l: number, a_r: number, b_l: number, b_r: number, m: number, lo: number, hi: number, n: number): Float64Array;

export function sampleFit(a_l: number, a_r: number, b_l: number, b_r: number, m: number, n: number, seed: number): SampleFit;

export function scalingDemo(common_share: number, n_regions: number, n_bins: number, seed: number): ScalingDemo;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_samplefit_free: (a: number, b: number) => void;
    readonly __wbg_scalingdemo_free: (a: number, b: number) => void;
    readonly densityGrid: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly sampleFit: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly samplefit_log_likelihood: (a: number) => number;
    readonly samplefit_params: (a: number) => [number, number];
    readonly samplefit_samples: (a: number) => [number, number];
    readonly samplefit_std_errors: (a: number) => [number, number];
    readonly scalingDemo: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly scalingdemo_beta: (a: number) => number;
    readonly scalingdemo_beta_se: (a: number) => number;
    readonly scalingdemo_centers: (a: number) => [number, number];
    readonly scalingdemo_sigmas: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
