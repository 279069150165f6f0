/* SPDX-License-Identifier: Apache-2.0 */

/*
 * tgbounds: certified upper bounds and practical lower bounds on transient
 * growth for linear ODEs, difference equations, and constant-delay DDEs,
 * computed from pseudospectra of the associated matrix-valued functions.
 *
 * Conventions:
 *   - Every entry point returns a tgb_status; TGB_OK is 0.
 *   - On failure, tgb_last_error() returns a thread-local message describing
 *     what went wrong (valid until the next failing call on that thread).
 *   - Out-parameters are written only on success; pass NULL for any result
 *     you do not need (where documented).
 *   - All returned objects are freed by their matching *_free function.
 *   - Results are tables: named double columns plus string metadata pairs.
 */

#ifndef TGBOUNDS_H
#define TGBOUNDS_H

#ifdef __cplusplus
extern "C"
{
#endif

typedef enum tgb_status
{
  TGB_OK = 0,
  TGB_ERR_INVALID_ARGUMENT = 1,
  TGB_ERR_DIMENSION = 2,
  TGB_ERR_SINGULAR = 3,
  TGB_ERR_INFEASIBLE = 4,   /* feasibility chain for a contour cannot hold */
  TGB_ERR_UNSUPPORTED = 5,
  TGB_ERR_NOT_FOUND = 6,
  TGB_ERR_WINDOW = 7,       /* level set escapes every admissible window */
  TGB_ERR_NUMERIC = 8,
  TGB_ERR_PRECONDITION = 9,
  TGB_ERR_IO = 10,
  TGB_ERR_PARSE = 11,
  TGB_ERR_INTERNAL = 12
} tgb_status;

/* Stable name for a status code ("ok", "invalid-argument", ...). */
const char *tgb_status_name(tgb_status s);

/* Thread-local message from the most recent failing call on this thread. */
const char *tgb_last_error(void);

/* Library version string. */
const char *tgb_version(void);

/* ---- Problems ---------------------------------------------------------- */

typedef struct tgb_problem tgb_problem;

/* Builtin ids: "laser", "pdde" / "pdde:n", "scalar",
 * "laser-diffeq" / "laser-diffeq:n". */
tgb_status tgb_problem_builtin(const char *spec, tgb_problem **out);

/* JSON problem files; see the schema in the project README. */
tgb_status tgb_problem_load(const char *path, tgb_problem **out);
tgb_status tgb_problem_parse_json(const char *text, tgb_problem **out);
tgb_status tgb_problem_save(const tgb_problem *p, const char *path);

/* Serialized form; free the returned string with tgb_string_free. */
tgb_status tgb_problem_to_json(const tgb_problem *p, char **out_text);

void tgb_problem_free(tgb_problem *p);
void tgb_string_free(char *s);

/* "ode", "hode", "diffeq", or "dde". */
const char *tgb_problem_kind(const tgb_problem *p);
const char *tgb_problem_name(const tgb_problem *p);
/* State dimension (component dimension for higher-order kinds). */
int tgb_problem_dim(const tgb_problem *p);
/* Delay tau for dde problems; 0 for every other kind. */
double tgb_problem_delay(const tgb_problem *p);

/* ---- Result tables ----------------------------------------------------- */

typedef struct tgb_table tgb_table;

int tgb_table_nrows(const tgb_table *t);
int tgb_table_ncols(const tgb_table *t);
/* Column name / data (nrows doubles). Index out of range returns NULL. */
const char *tgb_table_col_name(const tgb_table *t, int col);
const double *tgb_table_col(const tgb_table *t, int col);
/* Metadata: ordered key/value string pairs (run parameters, certification
 * notes, contour constants, ...). */
int tgb_table_meta_count(const tgb_table *t);
const char *tgb_table_meta_key(const tgb_table *t, int i);
const char *tgb_table_meta_value(const tgb_table *t, int i);
/* Value for a key, or NULL if absent. */
const char *tgb_table_meta_get(const tgb_table *t, const char *key);
void tgb_table_free(tgb_table *t);

/* ---- Pseudospectra ----------------------------------------------------- */

/*
 * Level sets of z -> 1/||T(z)^{-1}|| for the problem's characteristic
 * matrix function.
 *
 *   epsilons  : n_eps level values (> 0)
 *   window    : {re_lo, re_hi, im_lo, im_hi} or NULL for automatic sizing
 *   nx, ny    : grid resolution (<= 0 picks the default 400)
 *   certify   : nonzero runs the grid-doubling stability check
 *
 * Results (any out-pointer may be NULL):
 *   field     : columns re, im, sigma_min         (nx*ny rows, row-major in re)
 *   levels    : columns eps, curve, re, im        (level-set polyline vertices;
 *               "curve" numbers the polylines, vertices in traversal order)
 *   summary   : columns eps, alpha, rho, arc_length, hull_perimeter,
 *               certified, exact, touched, nx, ny (one row per epsilon)
 */
tgb_status tgb_pseudospectrum(const tgb_problem *p, const double *epsilons, int n_eps,
                              const double *window, int nx, int ny, int certify,
                              tgb_table **field, tgb_table **levels, tgb_table **summary);

/* ---- Upper bounds (ode / hode / diffeq kinds) --------------------------- */

/*
 * Contour-based transient bound, one curve per epsilon, plus their pointwise
 * minimum. For continuous kinds `times` holds times; for diffeq it holds
 * step indices (rounded to integers). majorant (diffeq only) switches to the
 * scaled-power majorant contours, which require every coefficient between
 * lag 0 and the deepest lag to vanish.
 *
 * Table: columns t_or_n, bound, eps_used, then bound_eps1..bound_epsK.
 * Metadata records per-epsilon contour measurements and certification.
 */
tgb_status tgb_bound(const tgb_problem *p, const double *epsilons, int n_eps,
                     const double *times, int n_times, int majorant, tgb_table **out);

/* ---- Upper bounds (dde kind) -------------------------------------------- */

/*
 * Delay-system transient bound on ||Psi(t)|| (fundamental solution) or on
 * ||u(t)|| for the problem's initial data (with_history nonzero).
 *
 *   variant        : "split", "vertical", "nonsplit", or "nonsplit-shifted"
 *   y0             : contour half-height; <= 0 scans for a good value
 *   statement_tail : nonzero uses the simplified tail form e^{x0 t} C/(t/tau)
 *                    instead of the default e^{x0 (t-tau)} C/(t/tau)
 *
 * Split and vertical variants require every time >= tau; nonsplit > 0.
 * Table: columns t, bound. Metadata: mode, y0, eta, x0, beta, I0, C,
 * alpha_T, certification notes.  Fundamental-solution calls (with_history = 0)
 * also carry "initial_sup" (an upper bound for sup ||Psi(t)|| over [0, tau])
 * and "decay_cap" (an upper bound for sup over t past the last requested
 * time; "inf" when the curve is not eventually decreasing), so
 * max(initial_sup, max of the bound column, decay_cap) brackets
 * sup_t ||Psi(t)|| over all t >= 0.
 */
tgb_status tgb_bound_dde(const tgb_problem *p, const char *variant, double y0,
                         const double *times, int n_times, int statement_tail,
                         int with_history, tgb_table **out);

/* ---- Lower bounds ------------------------------------------------------- */

/*
 * Resolvent-based lower bound on sup_t ||Psi(t)||: for each x on an equally
 * spaced mesh of [x_lo, x_hi], x * sup_y ||T(x+iy)^{-1}|| with a per-x
 * certified truncation height. ode and dde kinds.
 *
 * Table: columns x, lower_bound. Metadata: best, best_x.
 */
tgb_status tgb_lower_bound(const tgb_problem *p, double x_lo, double x_hi, int n_x,
                           tgb_table **out);

/* ---- Simulation --------------------------------------------------------- */

/*
 * Reference trajectory for the problem's own initial data.
 *
 *   h        : requested step (dde kind; <= 0 picks automatically)
 *   t_end    : final time (diffeq: final step index)
 *   samples  : ~number of output rows (<= 0 keeps every step)
 *   keep_states: nonzero adds state component columns u0_re, u0_im, ...
 *
 * Table: columns t_or_n, norm [, components]. Metadata: h, method.
 */
tgb_status tgb_simulate(const tgb_problem *p, double h, double t_end, int samples,
                        int keep_states, tgb_table **out);

/*
 * ||Psi(t)||_2 for a dde problem's fundamental solution on ~samples
 * step-aligned times in [0, t_end]. Table: columns t, norm.
 */
tgb_status tgb_fundamental_norms(const tgb_problem *p, double t_end, int samples, double h,
                                 tgb_table **out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TGBOUNDS_H */
