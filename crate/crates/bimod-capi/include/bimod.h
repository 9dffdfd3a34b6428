#ifndef BIMOD_H
#define BIMOD_H

/* Generated by cbindgen from bimod-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BimodStatus {
  BIMOD_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BIMOD_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BIMOD_STATUS_UTF8 = 2,
  /**
   * A file-format payload failed to parse.
   */
  BIMOD_STATUS_PARSE = 3,
  /**
   * Invalid instance, graph, division, or assignment data.
   */
  BIMOD_STATUS_INVALID = 4,
  /**
   * The operation needs a normalized instance (7 must divide the sum).
   */
  BIMOD_STATUS_NOT_NORMALIZED = 5,
  /**
   * Modularity is undefined on a graph without edges.
   */
  BIMOD_STATUS_UNDEFINED = 6,
  /**
   * An exhaustive operation was asked to exceed its size limit.
   */
  BIMOD_STATUS_TOO_LARGE = 7,
} BimodStatus;

/**
 * Solver selection for [`bimod_solve`].
 */
typedef enum BimodMethod {
  BIMOD_METHOD_BRUTE_FORCE = 0,
  BIMOD_METHOD_GREEDY = 1,
  BIMOD_METHOD_LABEL_PROPAGATION = 2,
  BIMOD_METHOD_ALTERNATING = 3,
} BimodMethod;

/**
 * Opaque division handle.
 */
typedef struct BimodDivision BimodDivision;

/**
 * Opaque bipartite graph handle (with role annotations when it came from a
 * gadget).
 */
typedef struct BimodGraph BimodGraph;

/**
 * Opaque 3-PARTITION instance handle.
 */
typedef struct BimodInstance BimodInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *bimod_last_error_message(void);

/**
 * Free a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must have been returned by a bimod function and not freed before.
 */
void bimod_string_free(char *s);

/**
 * Parse a graph file (see the text format in the bimod crate).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be writable.
 */
enum BimodStatus bimod_graph_parse(const char *text, struct BimodGraph **out);

/**
 * Render the graph back to its file format (role lines included when the
 * graph carries roles). The result is freed with [`bimod_string_free`].
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum BimodStatus bimod_graph_render(const struct BimodGraph *g, char **out);

/**
 * Red count, blue count, and edge count of a graph.
 *
 * # Safety
 * `g` must be a live graph handle; the out pointers must be writable.
 */
enum BimodStatus bimod_graph_counts(const struct BimodGraph *g,
                                    uint64_t *out_red,
                                    uint64_t *out_blue,
                                    uint64_t *out_edges);

/**
 * # Safety
 * `g` must come from this library and not be freed twice.
 */
void bimod_graph_free(struct BimodGraph *g);

/**
 * Parse an instance file `{"k": ..., "elements": [...]}`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum BimodStatus bimod_instance_parse(const char *json, struct BimodInstance **out);

/**
 * Build an instance from raw elements; validates the window constraints.
 *
 * # Safety
 * `elements` must point to `len` readable values; `out` must be writable.
 */
enum BimodStatus bimod_instance_new(size_t k,
                                    const uint64_t *elements,
                                    size_t len,
                                    struct BimodInstance **out);

/**
 * # Safety
 * `inst` must be a live instance handle; `out` must be writable.
 */
enum BimodStatus bimod_instance_is_normalized(const struct BimodInstance *inst, bool *out);

/**
 * New handle with the elements scaled by 7 when needed (identity when the
 * instance is already normalized).
 *
 * # Safety
 * `inst` must be a live instance handle; `out` must be writable.
 */
enum BimodStatus bimod_instance_normalize(const struct BimodInstance *inst,
                                          struct BimodInstance **out);

/**
 * Gadget order and size from the closed-form count formulas.
 *
 * # Safety
 * `inst` must be a live instance handle; the out pointers must be writable.
 */
enum BimodStatus bimod_instance_counts(const struct BimodInstance *inst,
                                       uint64_t *out_vertices,
                                       uint64_t *out_edges);

/**
 * The decision threshold K(A) as an exact `p/q` string.
 *
 * # Safety
 * `inst` must be a live instance handle; `out` must be writable.
 */
enum BimodStatus bimod_instance_threshold(const struct BimodInstance *inst, char **out);

/**
 * # Safety
 * `inst` must come from this library and not be freed twice.
 */
void bimod_instance_free(struct BimodInstance *inst);

/**
 * Build the gadget graph (with role annotations) for a normalized instance.
 *
 * # Safety
 * `inst` must be a live instance handle; `out` must be writable.
 */
enum BimodStatus bimod_gadget_build(const struct BimodInstance *inst, struct BimodGraph **out);

/**
 * Parse a division file against a graph.
 *
 * # Safety
 * `g` must be a live graph handle; `json` a valid string; `out` writable.
 */
enum BimodStatus bimod_division_parse(const struct BimodGraph *g,
                                      const char *json,
                                      struct BimodDivision **out);

/**
 * Build a division from one community label per vertex, in vertex order.
 *
 * # Safety
 * `labels` must point to `len` readable values; `out` must be writable.
 */
enum BimodStatus bimod_division_from_labels(const struct BimodGraph *g,
                                            const size_t *labels,
                                            size_t len,
                                            struct BimodDivision **out);

/**
 * Render a division in the JSON file format.
 *
 * # Safety
 * `g` and `d` must be live handles; `out` must be writable.
 */
enum BimodStatus bimod_division_render(const struct BimodGraph *g,
                                       const struct BimodDivision *d,
                                       char **out);

/**
 * # Safety
 * `d` must be a live division handle; `out` must be writable.
 */
enum BimodStatus bimod_division_community_count(const struct BimodDivision *d, uint64_t *out);

/**
 * # Safety
 * `d` must come from this library and not be freed twice.
 */
void bimod_division_free(struct BimodDivision *d);

/**
 * Barber's bipartite modularity Q_b, exact, as a `p/q` string.
 *
 * # Safety
 * `g` and `d` must be live handles; `out` must be writable.
 */
enum BimodStatus bimod_bipartite_modularity(const struct BimodGraph *g,
                                            const struct BimodDivision *d,
                                            char **out);

/**
 * Standard modularity Q, exact, as a `p/q` string.
 *
 * # Safety
 * `g` and `d` must be live handles; `out` must be writable.
 */
enum BimodStatus bimod_standard_modularity(const struct BimodGraph *g,
                                           const struct BimodDivision *d,
                                           char **out);

/**
 * Maximize Q_b. `seed` matters only for label propagation. On success the
 * value string and, when `out_division` is non-null, the division handle
 * are written.
 *
 * # Safety
 * `g` must be a live graph handle; `out_value` must be writable;
 * `out_division` may be null.
 */
enum BimodStatus bimod_solve(const struct BimodGraph *g,
                             enum BimodMethod method,
                             uint64_t seed,
                             char **out_value,
                             struct BimodDivision **out_division);

/**
 * Maximize Q_b over canonical divisions by closed-form enumeration.
 * `out_decision` reports whether the optimum equals the threshold K(A),
 * i.e. whether the instance is a yes-instance.
 *
 * # Safety
 * `inst` must be a live instance handle; the out pointers must be writable.
 */
enum BimodStatus bimod_structured_search(const struct BimodInstance *inst,
                                         bool *out_decision,
                                         char **out_value);

/**
 * Evaluate one element-to-biclique assignment (0-based biclique indices,
 * one per element) through the closed form. `out_decision` is true iff the
 * canonical division hits K(A) exactly.
 *
 * # Safety
 * `inst` must be a live instance handle; `mapping` must point to `len`
 * readable values; the out pointers must be writable.
 */
enum BimodStatus bimod_verify_assignment(const struct BimodInstance *inst,
                                         const size_t *mapping,
                                         size_t len,
                                         bool *out_decision,
                                         char **out_value);

/**
 * Run the structural bound fuzzer. `lemma` selects one fact (1..7) or all
 * of them (0). Writes the total number of bound violations found.
 *
 * # Safety
 * `inst` must be a live instance handle; `out_violations` must be writable.
 */
enum BimodStatus bimod_fuzz_lemmas(const struct BimodInstance *inst,
                                   uint32_t lemma,
                                   uint64_t trials,
                                   uint64_t seed,
                                   uint64_t *out_violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIMOD_H */
