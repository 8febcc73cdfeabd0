/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_tunneling_free: (a: number, b: number) => void;
export const tunneling_density: (a: number) => [number, number, number, number];
export const tunneling_end_time: (a: number) => number;
export const tunneling_frames: (a: number) => number;
export const tunneling_lower: (a: number) => number;
export const tunneling_new: (a: number, b: number, c: number) => [number, number, number];
export const tunneling_points: (a: number) => number;
export const tunneling_potential: (a: number) => [number, number];
export const tunneling_probe: (a: number, b: number, c: number) => [number, number, number, number];
export const tunneling_trajectories: (a: number, b: number, c: bigint) => [number, number, number, number];
export const tunneling_upper: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
