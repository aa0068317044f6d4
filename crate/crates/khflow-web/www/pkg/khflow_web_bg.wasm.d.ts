/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const initial_vorticity: (a: number, b: number, c: number) => [number, number];
export const simulation_advance: (a: number, b: number) => [number, number];
export const simulation_energies: (a: number) => [number, number];
export const simulation_height: (a: number) => number;
export const simulation_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const simulation_spectrum: (a: number) => [number, number];
export const simulation_time_tbar: (a: number) => number;
export const simulation_viscosity: (a: number) => number;
export const simulation_vorticity: (a: number) => [number, number];
export const simulation_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
