/* tslint:disable */
/* eslint-disable */

/**
 * A running pseudo-spectral simulation.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    advance(steps: number): void;
    /**
     * `[K, E, P, δ/δ₀]`.
     */
    energies(): Float64Array;
    height(): number;
    constructor(modes: number, re: number, dt_factor: number, include_20pi: boolean, c_n: number);
    /**
     * `E(κ)` for `κ = 0..=width/2`.
     */
    spectrum(): Float64Array;
    time_tbar(): number;
    viscosity(): number;
    /**
     * Vorticity on the `width x height` grid, rows bottom to top.
     */
    vorticity(): Float32Array;
    width(): number;
}

/**
 * Vorticity of the initial condition on an `n x n` grid of cell centres,
 * row `j` (bottom to top) at `[j*n + i]`.
 */
export function initial_vorticity(n: number, include_20pi: boolean, c_n: number): Float32Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly initial_vorticity: (a: number, b: number, c: number) => [number, number];
    readonly simulation_advance: (a: number, b: number) => [number, number];
    readonly simulation_energies: (a: number) => [number, number];
    readonly simulation_height: (a: number) => number;
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly simulation_spectrum: (a: number) => [number, number];
    readonly simulation_time_tbar: (a: number) => number;
    readonly simulation_viscosity: (a: number) => number;
    readonly simulation_vorticity: (a: number) => [number, number];
    readonly simulation_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
