/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curvefit_free: (a: number, b: number) => void;
export const correlationProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const curvefit_deviance: (a: number) => number;
export const curvefit_grid: (a: number) => [number, number];
export const curvefit_mean: (a: number) => [number, number];
export const curvefit_nugget: (a: number) => number;
export const curvefit_sd: (a: number) => [number, number];
export const curvefit_theta: (a: number) => number;
export const design2d: (a: number, b: number, c: number) => [number, number];
export const designMinDistance: (a: number, b: number) => number;
export const fitCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
