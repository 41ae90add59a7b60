/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CGO_H
#define CGO_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CgoBranch {
  CGO_BRANCH_DIRECT = 0,
  CGO_BRANCH_MIRROR = 1,
} CgoBranch;

/**
 * Built-in cross-sections.
 */
typedef enum CgoShape {
  /**
   * Unit disk.
   */
  CGO_SHAPE_DISK = 0,
  /**
   * [-1/2, 1/2] x [0, 1].
   */
  CGO_SHAPE_SQUARE = 1,
} CgoShape;

/**
 * Result code of every call.
 */
typedef enum CgoStatus {
  CGO_STATUS_OK = 0,
  CGO_STATUS_NULL_POINTER = 1,
  CGO_STATUS_INVALID_ARGUMENT = 2,
  CGO_STATUS_CONFIG = 3,
  CGO_STATUS_CAUSTIC = 4,
  CGO_STATUS_NO_CONVERGENCE = 5,
  CGO_STATUS_SINGULAR = 6,
  CGO_STATUS_NUMERICAL = 7,
  CGO_STATUS_IO = 8,
  CGO_STATUS_PANIC = 9,
} CgoStatus;

/**
 * Run configuration.
 */
typedef struct CgoConfig CgoConfig;

/**
 * Cylinder cross-section with its inaccessible boundary part.
 */
typedef struct CgoDomain CgoDomain;

/**
 * Boundary phase with its ray cutoff width.
 */
typedef struct CgoPhase CgoPhase;

/**
 * Summary of a finished command: rows of (quantity, value, threshold, status).
 */
typedef struct CgoReport CgoReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cgo_version(void);

/**
 * Copies the last error message of this thread into `buf` and returns the
 * buffer size the full message needs, or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t cgo_last_error_message(char *buf, uintptr_t len);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CgoStatus cgo_config_default(struct CgoConfig **out);

/**
 * Parses and validates a TOML configuration. Relative descriptor paths are
 * resolved against `base_dir` (the working directory when null).
 *
 * # Safety
 * `toml` and `base_dir` must be null or NUL-terminated; `out` must be valid.
 */
enum CgoStatus cgo_config_from_toml(const char *toml, const char *base_dir, struct CgoConfig **out);

/**
 * Writes the configuration as TOML into `buf`; `needed` receives the
 * buffer size for the whole text.
 *
 * # Safety
 * `cfg` must come from this library; `buf` must be null or hold `len`
 * bytes; `needed` must be valid.
 */
enum CgoStatus cgo_config_to_toml(const struct CgoConfig *cfg,
                                  char *buf,
                                  uintptr_t len,
                                  uintptr_t *needed);

/**
 * # Safety
 * `cfg` must be null or come from this library and not be used afterwards.
 */
void cgo_config_free(struct CgoConfig *cfg);

/**
 * Runs a command (as named on the command line) writing its files under
 * `out_dir`. A run whose checks fail still returns `CGO_STATUS_OK`; see
 * [`cgo_report_all_pass`].
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum CgoStatus cgo_run(const struct CgoConfig *cfg,
                       const char *command,
                       const char *out_dir,
                       struct CgoReport **out);

/**
 * Number of summary rows.
 *
 * # Safety
 * `report` must be null or come from this library.
 */
uintptr_t cgo_report_rows(const struct CgoReport *report);

/**
 * True when no summary row failed.
 *
 * # Safety
 * `report` must be null or come from this library.
 */
bool cgo_report_all_pass(const struct CgoReport *report);

/**
 * Value and threshold of row `i` (NaN where the row has none).
 *
 * # Safety
 * `report` must come from this library; `value` and `threshold` must be valid.
 */
enum CgoStatus cgo_report_value(const struct CgoReport *report,
                                uintptr_t i,
                                double *value,
                                double *threshold);

/**
 * Quantity name (`column` 0) or status (`column` 3) of row `i`, copied like
 * [`cgo_last_error_message`]; `needed` receives the size for the whole text.
 *
 * # Safety
 * `report` must come from this library; `buf` null or `len` bytes; `needed` valid.
 */
enum CgoStatus cgo_report_text(const struct CgoReport *report,
                               uintptr_t i,
                               uintptr_t column,
                               char *buf,
                               uintptr_t len,
                               uintptr_t *needed);

/**
 * # Safety
 * `report` must be null or come from this library and not be used afterwards.
 */
void cgo_report_free(struct CgoReport *report);

/**
 * Boundary phase m(x₀) = (κ/2)x₀²χ(x₀) for a section of height `height_k`
 * with ray cutoff half-width `epsilon`.
 *
 * # Safety
 * `out` must be valid.
 */
enum CgoStatus cgo_phase_new(double kappa, double height_k, double epsilon, struct CgoPhase **out);

/**
 * Eikonal phase at (x1, x2) in ray-frame coordinates.
 *
 * # Safety
 * `phase` must come from this library; `psi` must be valid.
 */
enum CgoStatus cgo_phase_eval(const struct CgoPhase *phase,
                              enum CgoBranch which,
                              double x1,
                              double x2,
                              double *psi);

/**
 * Transport amplitude a₀ at (x1, x2).
 *
 * # Safety
 * `phase` must come from this library; `a0` must be valid.
 */
enum CgoStatus cgo_phase_amplitude(const struct CgoPhase *phase,
                                   enum CgoBranch which,
                                   double x1,
                                   double x2,
                                   double *a0);

/**
 * # Safety
 * `phase` must be null or come from this library and not be used afterwards.
 */
void cgo_phase_free(struct CgoPhase *phase);

/**
 * Cylinder of the given cross-section and height whose inaccessible part
 * is `n_arcs` arc-length intervals stored as (start, end) pairs in `gamma0`.
 *
 * # Safety
 * `gamma0` must hold `2 * n_arcs` values (may be null when `n_arcs` is 0);
 * `out` must be valid.
 */
enum CgoStatus cgo_domain_new(enum CgoShape shape,
                              double height,
                              const double *gamma0,
                              uintptr_t n_arcs,
                              struct CgoDomain **out);

/**
 * Whether (x1, x2) lies in the cross-section but outside the hull of the
 * inaccessible boundary part.
 *
 * # Safety
 * `domain` must come from this library; `reachable` must be valid.
 */
enum CgoStatus cgo_domain_reachable(const struct CgoDomain *domain,
                                    double x1,
                                    double x2,
                                    bool *reachable);

/**
 * Area of the convex hull of the inaccessible boundary part.
 *
 * # Safety
 * `domain` must come from this library; `area` must be valid.
 */
enum CgoStatus cgo_domain_hull_area(const struct CgoDomain *domain, double *area);

/**
 * # Safety
 * `domain` must be null or come from this library and not be used afterwards.
 */
void cgo_domain_free(struct CgoDomain *domain);

/**
 * Exponential Radon transform ∫ f(pω + tω⊥) e^{μt} dt of a grid function
 * on the line with normal angle `theta` and offset `p`.
 *
 * `re` and `im` hold `n1 * n2` samples with x1 varying fastest; `im` may be
 * null for real data. `bounds` is (x1_min, x1_max, x2_min, x2_max).
 *
 * # Safety
 * `re` (and `im` if not null) must hold `n1 * n2` values, `bounds` four;
 * `out_re` and `out_im` must be valid.
 */
enum CgoStatus cgo_exp_radon_grid(const double *re,
                                  const double *im,
                                  uintptr_t n1,
                                  uintptr_t n2,
                                  const double *bounds,
                                  double mu,
                                  double theta,
                                  double p,
                                  double *out_re,
                                  double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGO_H */
