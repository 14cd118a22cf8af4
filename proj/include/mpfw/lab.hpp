#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpfw/grid.hpp"
#include "mpfw/operators.hpp"

namespace mpfw {

/// Lebesgue exponents tied together by the scaling 1/p1 + ... + 1/pk = 1.
/// A bilinear tuple stores (p1, p2, p3) with p3 derived from the first two;
/// a trilinear tuple stores (p1..p4) likewise. Every entry lies in (1, inf)
/// and the output norm index is the conjugate of the last entry,
/// dual() = p3' (resp. p4').
class ExponentTuple {
  public:
    static ExponentTuple bilinear(double p1, double p2);
    static ExponentTuple trilinear(double p1, double p2, double p3);

    int arity() const { return count_ - 1; } // input slots: 2 or 3
    double p(int i) const;                   // 1-based, i <= arity() + 1
    double p1() const { return p_[0]; }
    double p2() const { return p_[1]; }
    double p3() const { return p_[2]; }
    double p4() const; // trilinear only
    double dual() const;

  private:
    ExponentTuple() = default;
    double p_[4] = {0, 0, 0, 0};
    int count_ = 0;
};

enum class RangeVerdict { inside, boundary, outside };

std::string_view to_string(RangeVerdict v);

/// Classifies a tuple against the stated exponent region of one of the
/// catalogued multiplier structures: case1..case8 (bilinear single rows),
/// T1 | T2 (double scale sums), tripletwist (trilinear). A tuple within
/// 1e-9 of a defining inequality, measured in that inequality's own
/// variable, is boundary; a strict violation wins over nearness.
RangeVerdict known_range(std::string_view case_id, const ExponentTuple& e);

/// The exponent region an operator's ratios are tagged against.
std::string default_case_for(std::string_view op);

/// Named grid symbols used across trials and the CLI: "default" is the
/// smooth degree-zero probe z1 z2 / (z1^2 + z2^2) vanishing at the origin,
/// "one" is the constant 1.
Symbol2D named_symbol(std::string_view name, std::uint32_t n);

/// Off-grid evaluator for the same names (exact, no table interpolation).
std::function<cplx(double, double)> named_symbol_eval(std::string_view name);

/// Outcome of one randomized operator probe. The ratio is
/// ||T(F...)||_dual / prod ||F_i||_{p_i}; resampled marks trials whose
/// first draw produced a zero-norm input and was redrawn from a derived
/// sub-seed.
struct TrialRecord {
    std::string op;
    std::string case_id;
    ExponentTuple exponents = ExponentTuple::bilinear(2.0, 4.0);
    std::uint32_t n = 0;
    std::uint64_t seed = 0;
    double decay = 0.0;
    bool windowed = false;
    int k_min = 0;
    int k_max = -1;
    double ratio = 0.0;
    RangeVerdict verdict = RangeVerdict::inside;
    bool resampled = false;
};

/// Operator selector for trials: op is one of twisted | tensor | T1 | T2 |
/// case7v1 | case7v2 | case7v3 | U1 | U2 | tripletwist; symbol picks the
/// grid symbol ("default" | "one") for the symbol-driven operators and is
/// ignored by the scale-sum ones.
struct OpSpec {
    std::string op;
    std::string symbol = "default";
};

/// Applies the named operator to caller-supplied fields (two or three,
/// matching the operator's arity, all on one grid). Windowed operators get
/// the standard staggered-radius families over [k_min, k_max]; -1 edges
/// resolve to the widest window the grid supports.
GridFunction2D apply_named_op(const OpSpec& spec, std::span<const GridFunction2D> inputs,
                              int k_min = -1, int k_max = -1);

/// Runs one deterministic probe: inputs from random_field on derived
/// sub-seeds, one operator application, norms by grid quadrature. Window
/// -1, -1 resolves to the widest family window the grid supports; symbol
/// operators ignore it.
TrialRecord norm_ratio_trial(const OpSpec& spec, const ExponentTuple& e,
                             std::uint64_t seed, std::uint32_t n, double decay,
                             int k_min = -1, int k_max = -1);

/// Cartesian sweep grid. Exponent tuples come from the symmetric p3prime
/// list (p1 = p2 = 2 p3') joined with the p1 x p2 (x p3) lists; an empty
/// union yields a header-only CSV.
struct SweepConfig {
    std::vector<OpSpec> ops;
    std::vector<ExponentTuple> exponents;
    std::vector<std::uint32_t> n_values;
    std::uint32_t seeds = 1;
    std::vector<double> decays;
    int k_min = -1;
    int k_max = -1;
    unsigned threads = 0; // 0: hardware concurrency
};

/// Flat key-value config text: one `key = value` per line, `#` comments,
/// comma-separated lists. Keys: operators, symbol, p3prime, p1, p2, p3, n,
/// seeds, decay, kmin, kmax, threads. Unknown or duplicate keys are
/// rejected.
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig parse_sweep_config_file(const std::string& path);

/// Executes every (op, tuple, n, decay, seed) combination on a fixed-size
/// work queue and returns the records sorted by key, so the output does not
/// depend on scheduling.
std::vector<TrialRecord> run_sweep(const SweepConfig& cfg);

/// CSV emission: header operator,case,p1,p2,p3,p4,n,seed,decay,kmin,kmax,
/// ratio,in_range; floats at 17 significant digits; p4 and the window stay
/// empty where a record has none.
void write_trial_csv(std::ostream& out, std::span<const TrialRecord> records);

/// run_sweep + CSV to a file; an unwritable path is rejected before any
/// trial runs.
std::vector<TrialRecord> sweep_to_csv(const SweepConfig& cfg, const std::string& path);

/// Midpoint tensor quadrature boxes for the continuous-frequency form:
/// outer box [-xi, xi] per linear axis, inner box [-phi_radius, phi_radius]
/// for the profile axes, both with the same step.
struct QuadratureGrid {
    double xi = 16.0;
    double step = 0.125;
    double phi_radius = 1.0;
};

struct FormValue {
    cplx value = 0.0;
    std::string warning; // empty when the step resolves the profile
};

/// Evaluates
///   sum f1(x1) f2(e1) f3(x1+e1) phi(x2) phi(e2) phi(x2+e2)
///       m(x1, x2/lambda, e1, e2/lambda) step^4
/// over the midpoint grids, with lambda = kInf substituting 0 for the
/// rescaled arguments. lambda below 1 is rejected; a step above
/// phi_radius / 8 only warns.
FormValue counterexample_form(const std::function<cplx(double)>& f1,
                              const std::function<cplx(double)>& f2,
                              const std::function<cplx(double)>& f3,
                              const std::function<double(double)>& phi_hat,
                              const std::function<cplx(double, double, double, double)>& m,
                              double lambda, const QuadratureGrid& grid);

/// Scaling-study configuration. m0: benign | one ("unbounded" names the
/// existence-only construction and is rejected); mtilde: default | one;
/// delta is the cone aperture of the default mtilde. The x-grid drives the
/// physical-side norm checks.
struct CounterexampleConfig {
    QuadratureGrid grid;
    double delta = 1.0;
    std::vector<double> lambdas = {4.0, 16.0, 64.0};
    std::string m0 = "benign";
    std::string mtilde = "default";
    double p1 = 3.0;
    double p2 = 3.0;
    double p3 = 3.0;
    double x_halfwidth = 16.0;
    double x_step = 0.0625;
};

/// Same grammar as the sweep config. Keys: xi, step, phi_radius, delta,
/// lambdas, m0, mtilde, p1, p2, p3, x_halfwidth, x_step.
CounterexampleConfig parse_counterexample_config(std::istream& in);
CounterexampleConfig parse_counterexample_config_file(const std::string& path);

/// Results of the lambda sweep against the lambda = inf limit, plus the
/// physical-side norm factorization audit |  ||F_i|| - ||f_i|| ||phi||  |
/// under F_i(x) = f_i(x1) lambda^{-1/p_i} phi(x2 / lambda).
struct CounterexampleReport {
    CounterexampleConfig config;
    std::vector<cplx> values;          // one per config lambda
    cplx value_inf = 0.0;
    std::vector<double> discrepancies; // |value - value_inf|
    bool monotone = false;             // strictly decreasing discrepancies
    double last_to_first = 0.0;        // disc.back() / disc.front()
    double fitted_rate = 0.0;          // least-squares slope of -log disc
    double f_norm[3] = {0, 0, 0};      // ||f_i||_{p_i} on the x-grid
    double phi_norm[3] = {0, 0, 0};    // ||phi||_{p_i}
    double norm_dev = 0.0;             // max over i and lambda
    std::string warning;
};

CounterexampleReport counterexample_experiment(const CounterexampleConfig& cfg);

void write_counterexample_report(std::ostream& out, const CounterexampleReport& rep);

/// Ratio growth across grid refinement for one operator and tuple.
struct RefinementRow {
    std::uint32_t n = 0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
};

struct RefinementReport {
    OpSpec op;
    ExponentTuple exponents = ExponentTuple::bilinear(2.0, 4.0);
    RangeVerdict verdict = RangeVerdict::inside;
    std::uint32_t seeds = 0;
    double decay = 0.0;
    double alarm_threshold = 2.0;
    std::vector<RefinementRow> rows;    // one per n, ascending
    std::vector<double> growth;         // max ratio step factors
    double overall_growth = 0.0;        // last max / first max
    bool alarm = false;                 // only meaningful inside the range
};

/// Runs seeds trials per grid size and reports per-n max and median ratios
/// with consecutive growth factors. The alarm fires only for tuples
/// classified inside the operator's range; outside and boundary tuples are
/// tagged but never alarm. n values must be ascending powers of two.
RefinementReport refinement_study(const OpSpec& spec, const ExponentTuple& e,
                                  std::span<const std::uint32_t> n_values,
                                  std::uint32_t seeds, double decay,
                                  double alarm_threshold = 2.0);

void write_refinement_report(std::ostream& out, const RefinementReport& rep);

} // namespace mpfw
