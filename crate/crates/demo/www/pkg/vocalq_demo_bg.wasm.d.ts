/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const angles_from_features: (a: number, b: number) => [number, number, number, number];
export const compare_settings: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const feature_names: () => [number, number];
export const measurement_distribution: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
