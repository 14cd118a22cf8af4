#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "mpfw/bumps.hpp"
#include "mpfw/decomp.hpp"
#include "mpfw/grid.hpp"
#include "mpfw/io.hpp"
#include "mpfw/lab.hpp"

using namespace mpfw;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::pair<int, int> parse_window(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("window must look like kmin:kmax, got " + text);
    const auto edge = [&](std::size_t b, std::size_t e) {
        int k = 0;
        const char* first = text.data() + b;
        const char* last = text.data() + e;
        const auto res = std::from_chars(first, last, k);
        if (res.ec != std::errc{} || res.ptr != last)
            throw std::invalid_argument("window must look like kmin:kmax, got " + text);
        return k;
    };
    return {edge(0, colon), edge(colon + 1, text.size())};
}

std::vector<cplx> seeded_vector(std::uint32_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    std::vector<cplx> v(n);
    for (cplx& z : v) z = cplx(ud(gen), ud(gen));
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output path: " + path);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for fiber-wise multiplier operators"};
    app.require_subcommand(1);

    std::string op, in1, in2, in3, symbol = "default", window, out_path;
    auto* apply = app.add_subcommand("apply", "run a named operator on stored fields");
    apply->add_option("--op", op, "operator name")->required();
    apply->add_option("--in1", in1, "first input field (MPFW1)")->required();
    apply->add_option("--in2", in2, "second input field");
    apply->add_option("--in3", in3, "third input field (trilinear ops)");
    apply->add_option("--symbol", symbol, "symbol name: default | one");
    apply->add_option("--window", window, "scale window kmin:kmax");
    apply->add_option("--out", out_path, "output field path")->required();

    std::string sweep_config, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "run a norm-ratio trial grid to CSV");
    sweep->add_option("--config", sweep_config, "flat key=value config file")->required();
    sweep->add_option("--out", sweep_out, "CSV output path")->required();

    std::string cone_symbol = "default", cone_report;
    int cone_modes = 8;
    std::uint32_t cone_n = 256;
    auto* cone = app.add_subcommand("cone", "cone-adapted mode expansion of a symbol");
    cone->add_option("--symbol", cone_symbol, "symbol name: default | one");
    cone->add_option("--modes", cone_modes, "modes per axis")->required();
    cone->add_option("--report", cone_report, "coefficient CSV path")->required();
    cone->add_option("--n", cone_n, "tabulation grid size");

    std::string cz_in, cz_report;
    double cz_level = 1.0, cz_p2 = 2.0, cz_p3prime = 1.0;
    auto* cz = app.add_subcommand("cz", "fiber-wise Calderon-Zygmund split of a field");
    cz->add_option("--in", cz_in, "input field (MPFW1)")->required();
    cz->add_option("--level", cz_level, "height lambda")->required();
    cz->add_option("--p2", cz_p2, "input exponent")->required();
    cz->add_option("--p3prime", cz_p3prime, "dual exponent")->required();
    cz->add_option("--report", cz_report, "verification report path")->required();

    std::string ce_config, ce_out;
    auto* ce = app.add_subcommand("counterexample", "lambda-scaling study of the trilinear form");
    ce->add_option("--config", ce_config, "flat key=value config file")->required();
    ce->add_option("--out", ce_out, "report output path")->required();

    std::uint32_t tel_n = 64;
    int tel_kmin = 0, tel_kmax = 3;
    auto* tel = app.add_subcommand("telescope", "check the low-pass/annular telescoping identity");
    tel->add_option("--n", tel_n, "grid size")->required();
    tel->add_option("--kmin", tel_kmin, "window bottom scale")->required();
    tel->add_option("--kmax", tel_kmax, "window top scale")->required();

    std::string range_case;
    double range_p1 = 0.0, range_p2 = 0.0, range_p3 = 0.0;
    auto* range = app.add_subcommand("range", "classify an exponent tuple against a known row");
    range->add_option("--case", range_case, "row id, e.g. case3 or tripletwist")->required();
    range->add_option("--p1", range_p1)->required();
    range->add_option("--p2", range_p2)->required();
    auto* p3_opt = range->add_option("--p3", range_p3, "third exponent (trilinear rows)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (apply->parsed()) {
            std::vector<GridFunction2D> fields;
            fields.push_back(read_field(in1));
            if (!in2.empty()) fields.push_back(read_field(in2));
            if (!in3.empty()) fields.push_back(read_field(in3));
            int k_min = -1, k_max = -1;
            if (!window.empty()) std::tie(k_min, k_max) = parse_window(window);
            const GridFunction2D out = apply_named_op(OpSpec{op, symbol}, fields, k_min, k_max);
            write_field(out_path, out);
            std::cout << "wrote " << out_path << " n=" << out.n() << " op=" << op << "\n";
        } else if (sweep->parsed()) {
            const SweepConfig cfg = parse_sweep_config_file(sweep_config);
            const std::vector<TrialRecord> recs = sweep_to_csv(cfg, sweep_out);
            std::cout << "wrote " << sweep_out << " rows=" << recs.size() << "\n";
        } else if (cone->parsed()) {
            const Symbol2D tab = named_symbol(cone_symbol, cone_n);
            const ConeDecomposition dec =
                cone_decompose(tab, make_mother_bump(), cone_modes,
                               SmoothSymbol2D(named_symbol_eval(cone_symbol)));
            const auto [recon, res] = cone_reconstruct(dec, cone_n);
            std::ofstream rep = open_out(cone_report);
            write_cone_csv(rep, dec);
            if (!rep.flush()) throw std::runtime_error("write failed: " + cone_report);
            std::cout << "cone symbol=" << cone_symbol << " modes=" << cone_modes
                      << " scales=[" << dec.k_min << "," << dec.k_max << "]"
                      << " max_err=" << fmt17(res.max_err) << " l2_err=" << fmt17(res.l2_err)
                      << " decay_n1=" << fmt17(dec.decay.exponent_n1)
                      << " decay_n2=" << fmt17(dec.decay.exponent_n2)
                      << " c2=" << fmt17(dec.decay.c_two) << "\n";
        } else if (cz->parsed()) {
            const GridFunction2D F = read_field(cz_in);
            const CZDecomposition dec = fiberwise_cz(F, cz_level, cz_p2, cz_p3prime);
            const CzVerifyReport rep = cz_verify(dec, F);
            std::ofstream repf = open_out(cz_report);
            write_cz_report(repf, dec, rep);
            if (!repf.flush()) throw std::runtime_error("write failed: " + cz_report);
            std::cout << "cz passed=" << (rep.passed ? 1 : 0)
                      << " good_sup=" << fmt17(rep.good_sup)
                      << " bound=" << fmt17(rep.good_sup_bound) << "\n";
            return rep.passed ? 0 : 1;
        } else if (ce->parsed()) {
            const CounterexampleConfig cfg = parse_counterexample_config_file(ce_config);
            const CounterexampleReport rep = counterexample_experiment(cfg);
            std::ofstream repf = open_out(ce_out);
            write_counterexample_report(repf, rep);
            if (!repf.flush()) throw std::runtime_error("write failed: " + ce_out);
            std::cout << "counterexample monotone=" << (rep.monotone ? 1 : 0)
                      << " last_to_first=" << fmt17(rep.last_to_first)
                      << " fitted_rate=" << fmt17(rep.fitted_rate) << "\n";
            if (!rep.warning.empty()) std::cout << "warning " << rep.warning << "\n";
        } else if (tel->parsed()) {
            const DyadicSymbolFamily fam = make_family(make_mother_bump(), tel_n, tel_kmin, tel_kmax);
            const std::vector<cplx> f = seeded_vector(tel_n, 1);
            const std::vector<cplx> g = seeded_vector(tel_n, 2);
            const double defect = telescoping_check(f, g, fam, fam, tel_kmin, tel_kmax);
            double sup = 0.0;
            for (const cplx& z : f) sup = std::max(sup, std::abs(z));
            double supg = 0.0;
            for (const cplx& z : g) supg = std::max(supg, std::abs(z));
            const double tol = 1e-12 * sup * supg;
            std::cout << "telescope n=" << tel_n << " window=[" << tel_kmin << "," << tel_kmax
                      << "] defect=" << fmt17(defect) << " tol=" << fmt17(tol) << "\n";
            return defect <= tol ? 0 : 1;
        } else if (range->parsed()) {
            const ExponentTuple e = p3_opt->count()
                                        ? ExponentTuple::trilinear(range_p1, range_p2, range_p3)
                                        : ExponentTuple::bilinear(range_p1, range_p2);
            const RangeVerdict v = known_range(range_case, e);
            std::cout << "case=" << range_case << " p1=" << fmt17(e.p1())
                      << " p2=" << fmt17(e.p2()) << " p3=" << fmt17(e.p3());
            if (e.arity() == 3) std::cout << " p4=" << fmt17(e.p4());
            std::cout << " dual=" << fmt17(e.dual()) << " verdict=" << to_string(v) << "\n";
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
