/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_closuredemo_free: (a: number, b: number) => void;
export const __wbg_get_gyradiusresult_ciRadius: (a: number) => number;
export const __wbg_get_gyradiusresult_exact: (a: number) => number;
export const __wbg_get_gyradiusresult_mean: (a: number) => number;
export const __wbg_get_gyradiusresult_nSamples: (a: number) => number;
export const __wbg_gyradiusresult_free: (a: number, b: number) => void;
export const __wbg_histogramresult_free: (a: number, b: number) => void;
export const __wbg_set_gyradiusresult_ciRadius: (a: number, b: number) => void;
export const __wbg_set_gyradiusresult_exact: (a: number, b: number) => void;
export const __wbg_set_gyradiusresult_mean: (a: number, b: number) => void;
export const __wbg_set_gyradiusresult_nSamples: (a: number, b: number) => void;
export const chordHistogram: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const closuredemo_angles: (a: number) => [number, number];
export const closuredemo_barycenter: (a: number) => [number, number, number, number];
export const closuredemo_n: (a: number) => number;
export const closuredemo_new: (a: number, b: bigint) => [number, number, number];
export const closuredemo_setAngle: (a: number, b: number, c: number) => void;
export const closuredemo_vertices: (a: number, b: number) => [number, number, number, number];
export const estimateGyradius: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const histogramresult_centers: (a: number) => [number, number];
export const histogramresult_densities: (a: number) => [number, number];
export const histogramresult_reference: (a: number) => [number, number];
export const histogramresult_standardErrors: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
