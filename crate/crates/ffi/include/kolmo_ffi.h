#ifndef KOLMO_FFI_H
#define KOLMO_FFI_H

/* Generated by cbindgen from the kolmo-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of a C API call.
 */
typedef enum KolmoStatus {
  KolmoStatus_Ok = 0,
  KolmoStatus_NullPointer = 1,
  KolmoStatus_InvalidUtf8 = 2,
  KolmoStatus_InvalidConfig = 3,
  KolmoStatus_InvalidArgument = 4,
  KolmoStatus_NumericalFailure = 5,
  KolmoStatus_AssertionFailure = 6,
  KolmoStatus_InternalPanic = 7,
} KolmoStatus;

/**
 * Opaque domain handle.
 */
typedef struct KolmoDomain KolmoDomain;

/**
 * Opaque operator handle.
 */
typedef struct KolmoOperator KolmoOperator;

/**
 * Opaque fundamental-solution handle.
 */
typedef struct KolmoSolution KolmoSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *kolmo_version(void);

/**
 * Free a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must have been returned by a `kolmo_*` call and not freed before.
 */
void kolmo_string_free(char *s);

/**
 * Build an operator from its JSON config `{"p": [...], "A0": [[..]], "B": [...]}`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string, `out` a valid pointer.
 */
enum KolmoStatus kolmo_operator_from_json(const char *json, struct KolmoOperator **out);

/**
 * Run all operator invariant checks; writes the JSON validation report.
 *
 * # Safety
 * `op` must be a live operator handle; `out_json` a valid pointer.
 */
enum KolmoStatus kolmo_operator_validate(const struct KolmoOperator *op, char **out_json);

/**
 * Space dimension of the operator.
 *
 * # Safety
 * `op` must be a live operator handle; `out` a valid pointer.
 */
enum KolmoStatus kolmo_operator_dim(const struct KolmoOperator *op, uintptr_t *out);

/**
 * # Safety
 * `op` must come from `kolmo_operator_from_json` and not be freed twice.
 */
void kolmo_operator_free(struct KolmoOperator *op);

/**
 * Build the fundamental-solution context for an operator.
 *
 * # Safety
 * `op` must be a live operator handle; `out` a valid pointer.
 */
enum KolmoStatus kolmo_solution_new(const struct KolmoOperator *op, struct KolmoSolution **out);

/**
 * Kernel value at (x, t); zero for t <= 0.
 *
 * # Safety
 * `sol` live handle; `x` points to `len` doubles; `out` valid.
 */
enum KolmoStatus kolmo_solution_eval(const struct KolmoSolution *sol,
                                     const double *x,
                                     uintptr_t len,
                                     double t,
                                     double *out);

/**
 * Natural log of the kernel; -inf on the vanishing half.
 *
 * # Safety
 * As for [`kolmo_solution_eval`].
 */
enum KolmoStatus kolmo_solution_log_eval(const struct KolmoSolution *sol,
                                         const double *x,
                                         uintptr_t len,
                                         double t,
                                         double *out);

/**
 * # Safety
 * `sol` must come from `kolmo_solution_new` and not be freed twice.
 */
void kolmo_solution_free(struct KolmoSolution *sol);

/**
 * Build a domain from the JSON set language (`{"op": "ball", ...}`).
 *
 * # Safety
 * `json` NUL-terminated; `out` valid.
 */
enum KolmoStatus kolmo_domain_from_json(const char *json, struct KolmoDomain **out);

/**
 * Membership oracle: writes 1 when x is inside, 0 otherwise.
 *
 * # Safety
 * `dom` live handle; `x` points to `len` doubles; `out` valid.
 */
enum KolmoStatus kolmo_domain_contains(const struct KolmoDomain *dom,
                                       const double *x,
                                       uintptr_t len,
                                       int32_t *out);

/**
 * # Safety
 * `dom` must come from `kolmo_domain_from_json` and not be freed twice.
 */
void kolmo_domain_free(struct KolmoDomain *dom);

/**
 * Evaluate the series regularity criterion at `x0`; writes the JSON report.
 * `params_json` may be NULL for defaults.
 *
 * # Safety
 * Handles live; `x0` points to `len` doubles; strings NUL-terminated.
 */
enum KolmoStatus kolmo_criterion_evaluate(const struct KolmoSolution *sol,
                                          const struct KolmoDomain *dom,
                                          const double *x0,
                                          uintptr_t len,
                                          const char *params_json,
                                          char **out_json);

/**
 * Solve the stationary Dirichlet problem at `point` with JSON boundary data
 * (`{"kind": "constant", "value": 1.0}` etc.); writes the JSON estimate.
 * `solver_json` may be NULL for defaults.
 *
 * # Safety
 * Handles live; `point` points to `len` doubles; strings NUL-terminated.
 */
enum KolmoStatus kolmo_solve_stationary(const struct KolmoSolution *sol,
                                        const struct KolmoDomain *dom,
                                        const char *data_json,
                                        const double *point,
                                        uintptr_t len,
                                        const char *solver_json,
                                        char **out_json);

/**
 * Solve the evolution Dirichlet problem at (`point`, `time`) on the
 * cylinder base x (t0, t1); writes the JSON estimate.
 *
 * # Safety
 * As for [`kolmo_solve_stationary`].
 */
enum KolmoStatus kolmo_solve_evolution(const struct KolmoSolution *sol,
                                       const struct KolmoDomain *dom,
                                       double t0,
                                       double t1,
                                       const char *data_json,
                                       const double *point,
                                       uintptr_t len,
                                       double time,
                                       const char *solver_json,
                                       char **out_json);

/**
 * Probe stationary boundary regularity at `x0`; writes the JSON verdict.
 * `solver_json` and `probe_json` may be NULL for defaults.
 *
 * # Safety
 * Handles live; `x0` points to `len` doubles; strings NUL-terminated.
 */
enum KolmoStatus kolmo_probe_stationary(const struct KolmoSolution *sol,
                                        const struct KolmoDomain *dom,
                                        const double *x0,
                                        uintptr_t len,
                                        const char *solver_json,
                                        const char *probe_json,
                                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KOLMO_FFI_H */
