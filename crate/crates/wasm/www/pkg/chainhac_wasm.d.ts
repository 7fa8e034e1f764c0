/* tslint:disable */
/* eslint-disable */

/**
 * A point set plus the result of the last clustering run on it.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Clusters the points; `cache_size` falls back to the linkage default.
     */
    cluster(linkage: string, cache_size?: number | null): void;
    /**
     * Interleaved `x, y` coordinates.
     */
    coords(): Float64Array;
    /**
     * Flat cluster label per point after cutting the tree into `k` parts.
     */
    labels(k: number): Uint32Array;
    /**
     * Dendrogram rows flattened as `left, right, height, size`.
     */
    merges(): Float64Array;
    /**
     * `kind` is `uniform` or `gaussian`.
     */
    constructor(kind: string, n: number, seed: number);
    /**
     * Per round: terminals, active clusters, merges.
     */
    rounds(): Uint32Array;
    /**
     * Cluster-distance evaluations of the last run.
     */
    readonly distance_evaluations: number;
    readonly is_empty: boolean;
    readonly len: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_cluster: (a: number, b: number, c: number, d: number) => [number, number];
    readonly demo_coords: (a: number) => [number, number];
    readonly demo_distance_evaluations: (a: number) => number;
    readonly demo_is_empty: (a: number) => number;
    readonly demo_labels: (a: number, b: number) => [number, number, number, number];
    readonly demo_len: (a: number) => number;
    readonly demo_merges: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_rounds: (a: number) => [number, number];
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
