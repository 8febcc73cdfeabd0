/* tslint:disable */
/* eslint-disable */

export class Tunneling {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `|ψ|²` for every frame, `frames × points`, row per frame.
     */
    density(): Float64Array;
    end_time(): number;
    frames(): number;
    lower(): number;
    /**
     * Evolve a packet with mean momentum `momentum` against a Gaussian
     * barrier of height `height` at the origin, up to `total_time`.
     */
    constructor(height: number, momentum: number, total_time: number);
    points(): number;
    /**
     * Potential values on the grid.
     */
    potential(): Float64Array;
    /**
     * Guiding velocity and quantum potential at `(x, t)`; `[v, U]`, NaN at a node.
     */
    probe(x: number, t: number): Float64Array;
    /**
     * Sample `n` starting points from `|ψ₀|²` and integrate them; returns
     * `n × frames` positions, NaN after a path stops.
     */
    trajectories(n: number, seed: bigint): Float64Array;
    upper(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_tunneling_free: (a: number, b: number) => void;
    readonly tunneling_density: (a: number) => [number, number, number, number];
    readonly tunneling_end_time: (a: number) => number;
    readonly tunneling_frames: (a: number) => number;
    readonly tunneling_lower: (a: number) => number;
    readonly tunneling_new: (a: number, b: number, c: number) => [number, number, number];
    readonly tunneling_points: (a: number) => number;
    readonly tunneling_potential: (a: number) => [number, number];
    readonly tunneling_probe: (a: number, b: number, c: number) => [number, number, number, number];
    readonly tunneling_trajectories: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly tunneling_upper: (a: number) => number;
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
