/* tslint:disable */
/* eslint-disable */

/**
 * A random planar arm and its path to closure.
 */
export class ClosureDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Edge directions as angles in radians.
     */
    angles(): Float64Array;
    barycenter(): Float64Array;
    n(): number;
    constructor(n: number, seed: bigint);
    setAngle(i: number, angle: number): void;
    /**
     * Flattened vertex coordinates at fraction `t` of the way to the closure.
     */
    vertices(t: number): Float64Array;
}

export class GyradiusResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    ciRadius: number;
    exact: number;
    mean: number;
    nSamples: number;
}

export class HistogramResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    centers(): Float64Array;
    densities(): Float64Array;
    reference(): Float64Array;
    standardErrors(): Float64Array;
}

/**
 * `reference` is one of `hexagon-eq`, `hexagon-neq`, `tetragon-full`,
 * `tetragon-quotient`.
 */
export function chordHistogram(reference: string, count: number, bins: number, seed: bigint): HistogramResult;

export function estimateGyradius(n: number, d: number, rel_radius: number, max_samples: number, seed: bigint): GyradiusResult;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_closuredemo_free: (a: number, b: number) => void;
    readonly __wbg_get_gyradiusresult_ciRadius: (a: number) => number;
    readonly __wbg_get_gyradiusresult_exact: (a: number) => number;
    readonly __wbg_get_gyradiusresult_mean: (a: number) => number;
    readonly __wbg_get_gyradiusresult_nSamples: (a: number) => number;
    readonly __wbg_gyradiusresult_free: (a: number, b: number) => void;
    readonly __wbg_histogramresult_free: (a: number, b: number) => void;
    readonly __wbg_set_gyradiusresult_ciRadius: (a: number, b: number) => void;
    readonly __wbg_set_gyradiusresult_exact: (a: number, b: number) => void;
    readonly __wbg_set_gyradiusresult_mean: (a: number, b: number) => void;
    readonly __wbg_set_gyradiusresult_nSamples: (a: number, b: number) => void;
    readonly chordHistogram: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly closuredemo_angles: (a: number) => [number, number];
    readonly closuredemo_barycenter: (a: number) => [number, number, number, number];
    readonly closuredemo_n: (a: number) => number;
    readonly closuredemo_new: (a: number, b: bigint) => [number, number, number];
    readonly closuredemo_setAngle: (a: number, b: number, c: number) => void;
    readonly closuredemo_vertices: (a: number, b: number) => [number, number, number, number];
    readonly estimateGyradius: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly histogramresult_centers: (a: number) => [number, number];
    readonly histogramresult_densities: (a: number) => [number, number];
    readonly histogramresult_reference: (a: number) => [number, number];
    readonly histogramresult_standardErrors: (a: number) => [number, number];
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
