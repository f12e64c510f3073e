/* tslint:disable */
/* eslint-disable */

/**
 * Fitted curve sampled on an even grid over [0, 1].
 */
export class CurveFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    deviance(): number;
    grid(): Float64Array;
    mean(): Float64Array;
    nugget(): number;
    /**
     * Root of the predicted MSE.
     */
    sd(): Float64Array;
    theta(): number;
}

export function correlationProfile(kernel: string, theta: number, max_h: number, points: number): Float64Array;

export function design2d(n: number, seed: number, iters: number): Float64Array;

export function designMinDistance(flat: Float64Array): number;

export function fitCurve(xs: Float64Array, ys: Float64Array, kernel: string, nugget: string, points: number): CurveFit;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curvefit_free: (a: number, b: number) => void;
    readonly correlationProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly curvefit_deviance: (a: number) => number;
    readonly curvefit_grid: (a: number) => [number, number];
    readonly curvefit_mean: (a: number) => [number, number];
    readonly curvefit_nugget: (a: number) => number;
    readonly curvefit_sd: (a: number) => [number, number];
    readonly curvefit_theta: (a: number) => number;
    readonly design2d: (a: number, b: number, c: number) => [number, number];
    readonly designMinDistance: (a: number, b: number) => number;
    readonly fitCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
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
