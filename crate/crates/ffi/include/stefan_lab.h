#ifndef STEFAN_LAB_H
#define STEFAN_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlCommand {
  SL_COMMAND_SIMULATE = 0,
  SL_COMMAND_PDE = 1,
  SL_COMMAND_CONVERGE = 2,
  SL_COMMAND_BETA_CHECK = 3,
  SL_COMMAND_COUPLE_CHECK = 4,
} SlCommand;

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_ARGUMENT = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  /**
   * Rejected parameters or config document.
   */
  SL_STATUS_CONFIG = 3,
  /**
   * Solver or simulation failure.
   */
  SL_STATUS_RUNTIME = 4,
  SL_STATUS_OUT_OF_RANGE = 5,
  /**
   * No interface at the requested sample.
   */
  SL_STATUS_NO_FRONT = 6,
  SL_STATUS_IO = 7,
  SL_STATUS_PANIC = 8,
} SlStatus;

/**
 * Opaque solution of an enthalpy solve.
 */
typedef struct SlPdeSolution SlPdeSolution;

/**
 * Opaque result of a harness study.
 */
typedef struct SlReport SlReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sl_last_error(void);

/**
 * Solves from the step `left` on (-l, 0), `right` on (0, l), sampling
 * `n_samples` equally spaced times on [0, t_end].
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum SlStatus sl_pde_solve(double a_minus,
                           double a_plus,
                           double left,
                           double right,
                           double l,
                           double dx,
                           double t_end,
                           size_t n_samples,
                           struct SlPdeSolution **out);

/**
 * # Safety
 * `h` must be NULL or a handle from [`sl_pde_solve`].
 */
size_t sl_pde_num_times(const struct SlPdeSolution *h);

/**
 * # Safety
 * `h` must be NULL or a handle from [`sl_pde_solve`].
 */
size_t sl_pde_num_cells(const struct SlPdeSolution *h);

/**
 * # Safety
 * `h` must be a live handle and `t` a valid pointer.
 */
enum SlStatus sl_pde_time(const struct SlPdeSolution *h, size_t k, double *t);

/**
 * Front position at sample `k`; [`SlStatus::NoFront`] when the profile has
 * no interface.
 *
 * # Safety
 * `h` must be a live handle and `b` a valid pointer.
 */
enum SlStatus sl_pde_front(const struct SlPdeSolution *h, size_t k, double *b);

/**
 * Copies cell centers (`k == SIZE_MAX`) or the density at sample `k` into
 * `buf`, which must hold `sl_pde_num_cells` values.
 *
 * # Safety
 * `h` must be a live handle and `buf` valid for `len` writes.
 */
enum SlStatus sl_pde_copy(const struct SlPdeSolution *h, size_t k, double *buf, size_t len);

/**
 * # Safety
 * `h` must be NULL or a handle from [`sl_pde_solve`] not yet freed.
 */
void sl_pde_free(struct SlPdeSolution *h);

/**
 * Runs a study from a TOML config document. Failed checks still return
 * [`SlStatus::Ok`]; inspect them with [`sl_report_all_passed`].
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_study_run(enum SlCommand command, const char *toml, struct SlReport **out);

/**
 * 1 when every check passed, 0 otherwise or for NULL.
 *
 * # Safety
 * `h` must be NULL or a live report handle.
 */
int32_t sl_report_all_passed(const struct SlReport *h);

/**
 * # Safety
 * `h` must be NULL or a live report handle.
 */
size_t sl_report_num_checks(const struct SlReport *h);

/**
 * Summary text, owned by the handle.
 *
 * # Safety
 * `h` must be NULL or a live report handle.
 */
const char *sl_report_summary(const struct SlReport *h);

/**
 * Writes the study files, report.json, summary.txt and plots under `dir`.
 *
 * # Safety
 * `h` must be a live report handle and `dir` a NUL-terminated string.
 */
enum SlStatus sl_report_write(const struct SlReport *h, const char *dir);

/**
 * # Safety
 * `h` must be NULL or a report handle not yet freed.
 */
void sl_report_free(struct SlReport *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEFAN_LAB_H */
