#ifndef HAEGAN_H
#define HAEGAN_H

/* C interface to the hyperbolic generative modeling library. Every function
 * returns an hg_status; on failure hg_last_error() describes the problem
 * for the calling thread. Points of L^n are arrays of n+1 doubles
 * [time, spatial...]. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HG_API __declspec(dllexport)
#else
#define HG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hg_status {
  HG_OK = 0,
  HG_TEST_FAILURE = 1,
  HG_CONFIG_ERROR = 2,
  HG_NUMERICAL_ABORT = 3,
  HG_INVALID_ARGUMENT = 4,
  HG_IO_ERROR = 5,
  HG_INTERNAL_ERROR = 6
} hg_status;

HG_API const char* hg_last_error(void);
HG_API const char* hg_version(void);

/* Geometry. n is the spatial dimension, k < 0 the curvature. */
HG_API hg_status hg_distance(const double* x, const double* y, size_t n, double k, double* out);
HG_API hg_status hg_exp_map(const double* x, const double* v, size_t n, double k, double* out);
HG_API hg_status hg_log_map(const double* x, const double* y, size_t n, double k, double* out);
HG_API hg_status hg_e2h(const double* t, size_t n, double k, double* out);
/* out receives n1 + n2 + 1 values. */
HG_API hg_status hg_direct_concat(const double* x, size_t n1, const double* y, size_t n2, double k, double* out);
HG_API hg_status hg_tangent_concat(const double* x, size_t n1, const double* y, size_t n2, double k, double* out);

/* Tree sets. */
typedef struct hg_tree_set hg_tree_set;

HG_API hg_status hg_tree_set_random(uint64_t seed, size_t count, size_t min_nodes, size_t max_nodes,
                                    hg_tree_set** out);
HG_API hg_status hg_tree_set_load(const char* path, hg_tree_set** out);
HG_API hg_status hg_tree_set_save(const hg_tree_set* set, const char* path);
HG_API size_t hg_tree_set_size(const hg_tree_set* set);
/* Writes the parent array (root has -1) of tree `index`; *node_count is
 * always set, parents is written only if capacity suffices. */
HG_API hg_status hg_tree_set_parents(const hg_tree_set* set, size_t index, int* parents, size_t capacity,
                                     size_t* node_count);
/* out[0] degree MMD, out[1] betweenness difference, out[2] closeness difference. */
HG_API hg_status hg_tree_metrics(const hg_tree_set* generated, const hg_tree_set* reference, double sigma,
                                 double out[3]);
HG_API void hg_tree_set_free(hg_tree_set* set);

/* Experiments. */
HG_API size_t hg_experiment_count(void);
HG_API const char* hg_experiment_name(size_t index);

typedef struct hg_run_config hg_run_config;

/* scale is "paper" or "ci". */
HG_API hg_status hg_run_config_new(const char* experiment, const char* scale, hg_run_config** out);
HG_API hg_status hg_run_config_load_file(hg_run_config* cfg, const char* path);
HG_API hg_status hg_run_config_set(hg_run_config* cfg, const char* key, const char* value);
HG_API hg_status hg_run_config_set_seed(hg_run_config* cfg, uint64_t seed);
/* Copies the resolved configuration text; *needed includes the terminator. */
HG_API hg_status hg_run_config_resolved(const hg_run_config* cfg, char* buf, size_t capacity, size_t* needed);
HG_API void hg_run_config_free(hg_run_config* cfg);

/* Runs the experiment below out_root. Returns HG_OK, HG_TEST_FAILURE,
 * HG_CONFIG_ERROR or HG_NUMERICAL_ABORT. The run directory is copied into
 * run_dir when it is non-NULL and large enough. Progress goes to stderr when
 * verbose is non-zero. */
HG_API hg_status hg_run(const hg_run_config* cfg, const char* out_root, int verbose, char* run_dir,
                        size_t capacity);

#ifdef __cplusplus
}
#endif

#endif
