/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_samplefit_free: (a: number, b: number) => void;
export const __wbg_scalingdemo_free: (a: number, b: number) => void;
export const densityGrid: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const sampleFit: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const samplefit_log_likelihood: (a: number) => number;
export const samplefit_params: (a: number) => [number, number];
export const samplefit_samples: (a: number) => [number, number];
export const samplefit_std_errors: (a: number) => [number, number];
export const scalingDemo: (a: number, b: number, c: number, d: number) => [number, number, number];
export const scalingdemo_beta: (a: number) => number;
export const scalingdemo_beta_se: (a: number) => number;
export const scalingdemo_centers: (a: number) => [number, number];
export const scalingdemo_sigmas: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
