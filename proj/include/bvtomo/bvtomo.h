#ifndef BVTOMO_BVTOMO_H
#define BVTOMO_BVTOMO_H

/* C interface of the bvtomo library. Every function returning int returns a
 * bvt_status; on failure bvt_last_error() describes the problem for the
 * calling thread. Handles are opaque and owned by the caller, who releases
 * them with the matching *_free function (NULL is accepted there).
 *
 * String outputs use (buf, cap, len): *len receives the full length without
 * the terminating NUL. When buf is NULL or cap <= *len nothing is copied and
 * BVT_E_INVALID_ARGUMENT is returned, so callers can size a buffer first. */

#include <stddef.h>

#if defined(_WIN32)
#define BVT_API __declspec(dllexport)
#else
#define BVT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bvt_status {
  BVT_OK = 0,
  BVT_E_INVALID_ARGUMENT = 1,
  BVT_E_PARSE = 2,
  BVT_E_IO = 3,
  BVT_E_SOLVER = 4,
  BVT_E_INCOMPATIBLE = 5,
  BVT_E_INTERNAL = 99
} bvt_status;

typedef struct bvt_config bvt_config;
typedef struct bvt_mesh bvt_mesh;
typedef struct bvt_data bvt_data;
typedef struct bvt_forward bvt_forward;
typedef struct bvt_run bvt_run;

BVT_API const char* bvt_version(void);
/* Message of the last failed call on this thread; "" if none. */
BVT_API const char* bvt_last_error(void);
BVT_API const char* bvt_status_name(int status);

/* Run configuration: flat key=value settings with defaults for every key. */
BVT_API int bvt_config_new(bvt_config** out);
BVT_API int bvt_config_clone(const bvt_config* cfg, bvt_config** out);
BVT_API void bvt_config_free(bvt_config* cfg);
BVT_API int bvt_config_set(bvt_config* cfg, const char* key, const char* value);
/* Applies every key=value line of a file ('#' comments allowed). */
BVT_API int bvt_config_load(bvt_config* cfg, const char* path);
BVT_API int bvt_config_get(const bvt_config* cfg, const char* key, char* buf, size_t cap, size_t* len);
/* Full key=value dump in a fixed key order. */
BVT_API int bvt_config_dump(const bvt_config* cfg, char* buf, size_t cap, size_t* len);
BVT_API int bvt_config_validate(const bvt_config* cfg);

/* Mesh from the mesh.* settings; zone tags follow the delta setting unless
 * the mesh comes from CSV, whose tags are kept. */
BVT_API int bvt_mesh_build(const bvt_config* cfg, bvt_mesh** out);
BVT_API void bvt_mesh_free(bvt_mesh* mesh);
BVT_API int bvt_mesh_counts(const bvt_mesh* mesh, size_t* nodes, size_t* elements, size_t* boundary_nodes);
/* Largest edge length. */
BVT_API int bvt_mesh_h(const bvt_mesh* mesh, double* h);
BVT_API int bvt_mesh_hash(const bvt_mesh* mesh, char* buf, size_t cap, size_t* len);
/* Writes nodes.csv and elements.csv into dir, creating it if needed. */
BVT_API int bvt_mesh_write_csv(const bvt_mesh* mesh, const char* dir);

/* Boundary data from data_file when set, else the closed form; noise of
 * level theta with the configured seed is applied in both cases. */
BVT_API int bvt_data_build(const bvt_config* cfg, const bvt_mesh* mesh, bvt_data** out);
BVT_API void bvt_data_free(bvt_data* data);
BVT_API int bvt_data_pair_count(const bvt_data* data, size_t* count);
BVT_API int bvt_data_write_csv(const bvt_data* data, const char* path);

/* Run manifest (settings, seed, mesh hash) written to dir/manifest.txt. */
BVT_API int bvt_manifest_write(const bvt_config* cfg, const bvt_mesh* mesh, const char* dir);

/* Direct solves with the true conductivity or alpha_file. */
BVT_API int bvt_forward_run(const bvt_config* cfg, const bvt_mesh* mesh, const bvt_data* data, bvt_forward** out);
BVT_API void bvt_forward_free(bvt_forward* fw);
/* Errors of the first pair against the closed form; NaN when alpha came from a file. */
BVT_API int bvt_forward_errors(const bvt_forward* fw, double* l2, double* h1, double* neumann_l2);
BVT_API int bvt_forward_write(const bvt_forward* fw, const char* dir);

/* Reconstruction. */
BVT_API int bvt_invert_run(const bvt_config* cfg, const bvt_mesh* mesh, const bvt_data* data, bvt_run** out);
BVT_API void bvt_run_free(bvt_run* run);
BVT_API int bvt_run_iterations(const bvt_run* run, size_t* count);
/* Uniform values after outer iteration `iteration` (1-based). */
BVT_API int bvt_run_uniform_values(const bvt_run* run, size_t iteration, double* alpha_in, double* alpha_out);
/* J after outer iteration `iteration` (1-based). */
BVT_API int bvt_run_objective(const bvt_run* run, size_t iteration, double* value);
/* Writes alpha.csv, omega.csv, history.csv, fields.vtk and manifest.txt. */
BVT_API int bvt_run_write(const bvt_run* run, const char* dir);

/* Markdown summary of every run directory below dir. */
BVT_API int bvt_report(const char* dir, char* buf, size_t cap, size_t* len);

#ifdef __cplusplus
}
#endif

#endif
