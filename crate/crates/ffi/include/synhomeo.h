#ifndef SYNHOMEO_H
#define SYNHOMEO_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SynStatus {
  SYN_STATUS_OK = 0,
  SYN_STATUS_NULL_POINTER = 1,
  SYN_STATUS_INVALID_ARGUMENT = 2,
  SYN_STATUS_SHAPE_MISMATCH = 3,
  SYN_STATUS_UNKNOWN_NODE = 4,
  SYN_STATUS_DUPLICATE_NODE = 5,
  SYN_STATUS_NO_SYNAPSE = 6,
  SYN_STATUS_INVALID_UTF8 = 7,
  SYN_STATUS_INTERNAL = 8,
  SYN_STATUS_PANIC = 9,
} SynStatus;

// Opaque network handle.
typedef struct SynNetwork SynNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call on the same thread.
const char *syn_last_error_message(void);

// Length of the feature vector for `n_channels` channels.
size_t syn_feature_dim(size_t n_channels);

// Creates an empty network with the given similarity block weights.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SynStatus syn_network_new(double w_time, double w_freq, double w_tf, struct SynNetwork **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `net` must be null or a handle from [`syn_network_new`] not yet freed.
void syn_network_free(struct SynNetwork *net);

// Adds node `id` and links it to every existing node whose similarity
// exceeds `xi`. `feature` holds `syn_feature_dim(n_channels)` values laid
// out as the time, frequency and time-frequency blocks in turn.
//
// # Safety
// `net` must be a live handle, `label` null or a NUL-terminated string,
// and `feature` must point to `feature_len` readable values.
enum SynStatus syn_network_add_node(struct SynNetwork *net,
                                    uint32_t id,
                                    const char *label,
                                    bool is_source,
                                    size_t n_channels,
                                    const double *feature,
                                    size_t feature_len,
                                    double xi);

// Writes the node count to `out`.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum SynStatus syn_network_len(const struct SynNetwork *net, size_t *out);

// Writes the synapse count to `out`.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum SynStatus syn_network_edge_count(const struct SynNetwork *net, size_t *out);

// Writes the similarity and strength of synapse `a`-`b`.
//
// # Safety
// `net` must be a live handle and both outputs writable.
enum SynStatus syn_network_synapse(const struct SynNetwork *net,
                                   uint32_t a,
                                   uint32_t b,
                                   double *similarity,
                                   double *strength);

// Multiplies every synapse touching one of `ids` by `gamma` and resets
// their clocks.
//
// # Safety
// `net` must be a live handle and `ids` must point to `n_ids` values.
enum SynStatus syn_network_consolidate(struct SynNetwork *net,
                                       const uint32_t *ids,
                                       size_t n_ids,
                                       double gamma);

// Decays every synapse by its endpoints' clocks and advances all clocks.
//
// # Safety
// `net` must be a live handle.
enum SynStatus syn_network_renormalize(struct SynNetwork *net, double lambda);

// Writes the mean strength of the synapses incident to `id`.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum SynStatus syn_network_mean_strength(const struct SynNetwork *net, uint32_t id, double *out);

// Writes the importance of `j` relative to `i`.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum SynStatus syn_network_importance(const struct SynNetwork *net,
                                      uint32_t i,
                                      uint32_t j,
                                      double alpha,
                                      double *out);

// Ranks the neighbours of `i` by importance. Writes up to `capacity`
// ids and scores, and the full ranking length to `out_len`.
//
// # Safety
// `net` must be a live handle, `out_ids` and `out_scores` must hold
// `capacity` values (either may be null when `capacity` is 0) and
// `out_len` must be writable.
enum SynStatus syn_network_top_k(const struct SynNetwork *net,
                                 uint32_t i,
                                 size_t k,
                                 double alpha,
                                 uint32_t *out_ids,
                                 double *out_scores,
                                 size_t capacity,
                                 size_t *out_len);

// Serializes the network to snapshot JSON tagged with `step`. Release the
// string with [`syn_string_free`].
//
// # Safety
// `net` must be a live handle and `out` writable.
enum SynStatus syn_network_snapshot_json(const struct SynNetwork *net, uint64_t step, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void syn_string_free(char *s);

// Extracts the feature vector of one epoch. `samples` is channel-major:
// `n_channels` rows of `n_samples` values. `out` must hold
// `syn_feature_dim(n_channels)` values.
//
// # Safety
// `samples` must point to `n_channels * n_samples` readable values and
// `out` to `out_len` writable ones.
enum SynStatus syn_extract_features(const double *samples,
                                    size_t n_channels,
                                    size_t n_samples,
                                    double sample_rate,
                                    double *out,
                                    size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNHOMEO_H */
