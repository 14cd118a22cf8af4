#include "mpfw/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "mpfw/bumps.hpp"

namespace mpfw {
namespace {

constexpr double kBoundaryTol = 1e-9;

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_exponent(double p, const char* name) {
    if (!std::isfinite(p) || p <= 1.0)
        throw std::invalid_argument(std::string(name) + " must lie in (1, inf), got " + g17(p));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, int slot, int attempt) {
    return splitmix64(seed ^ splitmix64(0x100 * std::uint64_t(attempt) + std::uint64_t(slot)));
}

} // namespace

ExponentTuple ExponentTuple::bilinear(double p1, double p2) {
    require_exponent(p1, "p1");
    require_exponent(p2, "p2");
    const double s = 1.0 / p1 + 1.0 / p2;
    if (!(s < 1.0))
        throw std::invalid_argument(
            "no admissible dual exponent: 1/p1 + 1/p2 must stay below 1, got " + g17(s));
    ExponentTuple e;
    e.count_ = 3;
    e.p_[0] = p1;
    e.p_[1] = p2;
    e.p_[2] = 1.0 / (1.0 - s);
    if (std::abs(1.0 / p1 + 1.0 / p2 + 1.0 / e.p_[2] - 1.0) > 1e-12)
        throw std::invalid_argument("exponent scaling drifted past 1e-12");
    return e;
}

ExponentTuple ExponentTuple::trilinear(double p1, double p2, double p3) {
    require_exponent(p1, "p1");
    require_exponent(p2, "p2");
    require_exponent(p3, "p3");
    const double s = 1.0 / p1 + 1.0 / p2 + 1.0 / p3;
    if (!(s < 1.0))
        throw std::invalid_argument(
            "no admissible dual exponent: 1/p1 + 1/p2 + 1/p3 must stay below 1, got " + g17(s));
    ExponentTuple e;
    e.count_ = 4;
    e.p_[0] = p1;
    e.p_[1] = p2;
    e.p_[2] = p3;
    e.p_[3] = 1.0 / (1.0 - s);
    if (std::abs(s + 1.0 / e.p_[3] - 1.0) > 1e-12)
        throw std::invalid_argument("exponent scaling drifted past 1e-12");
    return e;
}

double ExponentTuple::p(int i) const {
    if (i < 1 || i > count_)
        throw std::invalid_argument("exponent index out of range");
    return p_[i - 1];
}

double ExponentTuple::p4() const {
    if (count_ != 4)
        throw std::invalid_argument("p4 requested from a bilinear tuple");
    return p_[3];
}

double ExponentTuple::dual() const {
    double s = 0.0;
    for (int i = 0; i + 1 < count_; ++i) s += 1.0 / p_[i];
    return 1.0 / s;
}

std::string_view to_string(RangeVerdict v) {
    switch (v) {
        case RangeVerdict::inside: return "inside";
        case RangeVerdict::boundary: return "boundary";
        case RangeVerdict::outside: return "outside";
    }
    return "?";
}

namespace {

// Open interval constraint on one stated variable; nearness is measured in
// that variable's own units.
struct Bound {
    double value;
    double lo;
    double hi;
};

RangeVerdict classify(std::span<const Bound> bounds) {
    bool near = false;
    for (const Bound& b : bounds) {
        const bool near_lo = std::abs(b.value - b.lo) <= kBoundaryTol;
        const bool near_hi = std::isfinite(b.hi) && std::abs(b.value - b.hi) <= kBoundaryTol;
        if (near_lo || near_hi) {
            near = true;
            continue;
        }
        if (b.value < b.lo || b.value > b.hi) return RangeVerdict::outside;
    }
    return near ? RangeVerdict::boundary : RangeVerdict::inside;
}

RangeVerdict classify_bilinear_row(const ExponentTuple& e, double dual_lo, double dual_hi) {
    const Bound bounds[3] = {
        {e.p1(), 1.0, kInf},
        {e.p2(), 1.0, kInf},
        {e.dual(), dual_lo, dual_hi},
    };
    return classify(bounds);
}

} // namespace

RangeVerdict known_range(std::string_view case_id, const ExponentTuple& e) {
    const bool bilinear_case =
        case_id == "case1" || case_id == "case2" || case_id == "case3" || case_id == "case4" ||
        case_id == "case5" || case_id == "case6" || case_id == "case7" || case_id == "case8" ||
        case_id == "T1" || case_id == "T2";
    if (bilinear_case) {
        if (e.arity() != 2)
            throw std::invalid_argument(std::string(case_id) +
                                        " expects a 2-input exponent tuple");
        if (case_id == "case3") return classify_bilinear_row(e, 0.5, 2.0);
        if (case_id == "case6" || case_id == "T1" || case_id == "T2")
            return classify_bilinear_row(e, 1.0, 2.0);
        return classify_bilinear_row(e, 0.5, kInf);
    }
    if (case_id == "tripletwist") {
        if (e.arity() != 3)
            throw std::invalid_argument("tripletwist expects a 3-input exponent tuple");
        const Bound bounds[7] = {
            {e.p1(), 1.0, kInf},
            {e.p2(), 1.0, kInf},
            {e.p3(), 1.0, kInf},
            {e.p4(), 2.0, kInf},
            {1.0 / e.p1() + 1.0 / e.p2(), 0.5, kInf},
            {1.0 / e.p2() + 1.0 / e.p3(), 0.5, kInf},
            {1.0 / e.p1() + 1.0 / e.p3(), 0.5, kInf},
        };
        return classify(bounds);
    }
    throw std::invalid_argument("unknown case id: " + std::string(case_id));
}

std::string default_case_for(std::string_view op) {
    if (op == "twisted") return "case3";
    if (op == "tensor") return "T2";
    if (op == "T1") return "T1";
    if (op == "T2") return "T2";
    if (op == "case7v1" || op == "case7v2" || op == "case7v3") return "case7";
    if (op == "U1" || op == "U2" || op == "tripletwist") return "tripletwist";
    throw std::invalid_argument("unknown operator: " + std::string(op));
}

Symbol2D named_symbol(std::string_view name, std::uint32_t n) {
    if (name == "default")
        return make_symbol2d(n, [](std::int32_t a, std::int32_t b) {
            if (a == 0 && b == 0) return cplx(0.0, 0.0);
            const double x = a, y = b;
            return cplx(x * y / (x * x + y * y), 0.0);
        });
    if (name == "one")
        return make_symbol2d(n, [](std::int32_t, std::int32_t) { return cplx(1.0, 0.0); });
    throw std::invalid_argument("unknown symbol name: " + std::string(name));
}

std::function<cplx(double, double)> named_symbol_eval(std::string_view name) {
    if (name == "default")
        return [](double x, double y) {
            if (x == 0.0 && y == 0.0) return cplx(0.0, 0.0);
            return cplx(x * y / (x * x + y * y), 0.0);
        };
    if (name == "one")
        return [](double, double) { return cplx(1.0, 0.0); };
    throw std::invalid_argument("unknown symbol name: " + std::string(name));
}

namespace {

bool trilinear_op(std::string_view op) {
    return op == "U1" || op == "U2" || op == "tripletwist";
}

bool windowed_op(std::string_view op) {
    return op == "T1" || op == "T2" || op == "case7v1" || op == "case7v2" ||
           op == "case7v3" || op == "U1" || op == "U2";
}

int widest_k_max(std::uint32_t n) {
    // largest k with 2^k * 2.0 strictly under the frequency radius n/2
    int k = 0;
    while (double(1u << (k + 1)) * 2.0 < n / 2.0) ++k;
    return k;
}

std::vector<DyadicSymbolFamily> trial_families(std::string_view op, std::uint32_t n,
                                               int k_min, int k_max) {
    static const double radii[6][2] = {{1.0, 2.0}, {1.1, 1.9},  {0.9, 1.8},
                                       {1.2, 2.0}, {0.8, 1.7}, {1.05, 1.95}};
    std::size_t count = 0;
    if (op == "T1" || op == "T2") count = 2;
    if (op == "case7v1" || op == "case7v2" || op == "case7v3") count = 3;
    if (op == "U1" || op == "U2") count = 6;
    std::vector<DyadicSymbolFamily> fams;
    fams.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        fams.push_back(make_family(BumpProfile(radii[i][0], radii[i][1]), n, k_min, k_max));
    return fams;
}

GridFunction2D dispatch_op(const OpSpec& spec, std::span<const GridFunction2D> F,
                           std::span<const DyadicSymbolFamily> fams, std::uint32_t n) {
    if (spec.op == "twisted") return twisted_paraproduct(F[0], F[1], named_symbol(spec.symbol, n));
    if (spec.op == "tensor")
        return tensor_bilinear(F[0], F[1], named_symbol(spec.symbol, n),
                               named_symbol(spec.symbol, n));
    if (spec.op == "T1") return T1(F[0], F[1], fams[0], fams[1]);
    if (spec.op == "T2") return T2(F[0], F[1], fams[0], fams[1]);
    if (spec.op == "case7v1") return case7_operator(F[0], F[1], 1, fams);
    if (spec.op == "case7v2") return case7_operator(F[0], F[1], 2, fams);
    if (spec.op == "case7v3") return case7_operator(F[0], F[1], 3, fams);
    if (spec.op == "U1") return U1(F[0], F[1], F[2], fams);
    if (spec.op == "U2") return U2(F[0], F[1], F[2], fams);
    if (spec.op == "tripletwist") {
        const Symbol2D m = named_symbol(spec.symbol, n);
        return tripletwist(F[0], F[1], F[2], m, m, m);
    }
    throw std::invalid_argument("unknown operator: " + spec.op);
}

} // namespace

GridFunction2D apply_named_op(const OpSpec& spec, std::span<const GridFunction2D> inputs,
                              int k_min, int k_max) {
    if (spec.symbol != "default" && spec.symbol != "one")
        throw std::invalid_argument("unknown symbol name: " + spec.symbol);
    default_case_for(spec.op);
    const std::size_t want = trilinear_op(spec.op) ? 3 : 2;
    if (inputs.size() != want)
        throw std::invalid_argument(spec.op + " expects " + std::to_string(want) +
                                    " input fields");
    const std::uint32_t n = inputs[0].n();
    for (const GridFunction2D& f : inputs)
        if (f.n() != n) throw std::invalid_argument("input fields must share one grid size");
    std::vector<DyadicSymbolFamily> fams;
    if (windowed_op(spec.op)) {
        const int lo = k_min < 0 ? 0 : k_min;
        const int hi = k_max < 0 ? widest_k_max(n) : k_max;
        fams = trial_families(spec.op, n, lo, hi);
    }
    return dispatch_op(spec, inputs, fams, n);
}

TrialRecord norm_ratio_trial(const OpSpec& spec, const ExponentTuple& e, std::uint64_t seed,
                             std::uint32_t n, double decay, int k_min, int k_max) {
    TrialRecord rec;
    rec.op = spec.op;
    rec.case_id = default_case_for(spec.op);
    if (spec.symbol != "default" && spec.symbol != "one")
        throw std::invalid_argument("unknown symbol name: " + spec.symbol);
    const int inputs = trilinear_op(spec.op) ? 3 : 2;
    if (e.arity() != inputs)
        throw std::invalid_argument(spec.op + " expects a " +
                                    (inputs == 3 ? std::string("3") : std::string("2")) +
                                    "-input exponent tuple");
    rec.exponents = e;
    rec.n = n;
    rec.seed = seed;
    rec.decay = decay;
    rec.windowed = windowed_op(spec.op);
    if (rec.windowed) {
        rec.k_min = k_min < 0 ? 0 : k_min;
        rec.k_max = k_max < 0 ? widest_k_max(n) : k_max;
    }

    std::vector<GridFunction2D> F;
    double norm_product = 1.0;
    for (int slot = 0; slot < inputs; ++slot) {
        double norm = 0.0;
        GridFunction2D candidate(8);
        for (int attempt = 0; attempt < 64; ++attempt) {
            candidate = random_field(sub_seed(seed, slot, attempt), n, decay);
            norm = lp_norm(candidate, e.p(slot + 1));
            if (norm != 0.0) break;
            rec.resampled = true;
        }
        if (norm == 0.0)
            throw std::runtime_error("could not draw a nonzero input field");
        norm_product *= norm;
        F.push_back(std::move(candidate));
    }

    const std::vector<DyadicSymbolFamily> fams =
        rec.windowed ? trial_families(spec.op, n, rec.k_min, rec.k_max)
                     : std::vector<DyadicSymbolFamily>{};
    const GridFunction2D out = dispatch_op(spec, F, fams, n);
    rec.ratio = lp_norm(out, e.dual()) / norm_product;
    rec.verdict = known_range(rec.case_id, e);
    return rec;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        const std::string item =
            trim(std::string_view(value).substr(pos, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

double parse_double(const std::string& text, const std::string& key) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw std::invalid_argument("config key " + key + ": not a number: " + text);
    return v;
}

long long parse_int(const std::string& text, const std::string& key) {
    long long v = 0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw std::invalid_argument("config key " + key + ": not an integer: " + text);
    return v;
}

std::map<std::string, std::string> parse_flat_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw std::invalid_argument("config key repeated: " + key);
    }
    return kv;
}

std::string take(std::map<std::string, std::string>& kv, const std::string& key,
                 const std::string& fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::string v = it->second;
    kv.erase(it);
    return v;
}

void reject_leftovers(const std::map<std::string, std::string>& kv) {
    if (!kv.empty())
        throw std::invalid_argument("unknown config key: " + kv.begin()->first);
}

int parse_window_edge(const std::string& text, const std::string& key) {
    if (text == "auto") return -1;
    const long long v = parse_int(text, key);
    if (v < 0 || v > 62)
        throw std::invalid_argument("config key " + key + ": out of range: " + text);
    return int(v);
}

} // namespace

SweepConfig parse_sweep_config(std::istream& in) {
    auto kv = parse_flat_config(in);
    SweepConfig cfg;

    const std::string symbol = take(kv, "symbol", "default");
    if (symbol != "default" && symbol != "one")
        throw std::invalid_argument("unknown symbol name: " + symbol);
    for (const std::string& op : split_list(take(kv, "operators", ""))) {
        default_case_for(op); // validates the name
        cfg.ops.push_back(OpSpec{op, symbol});
    }

    const std::vector<std::string> p3prime = split_list(take(kv, "p3prime", ""));
    const std::vector<std::string> p1 = split_list(take(kv, "p1", ""));
    const std::vector<std::string> p2 = split_list(take(kv, "p2", ""));
    const std::vector<std::string> p3 = split_list(take(kv, "p3", ""));
    for (const std::string& t : p3prime) {
        const double v = parse_double(t, "p3prime");
        cfg.exponents.push_back(ExponentTuple::bilinear(2.0 * v, 2.0 * v));
    }
    if (p1.empty() != p2.empty())
        throw std::invalid_argument("config keys p1 and p2 go together");
    if (!p3.empty() && p1.empty())
        throw std::invalid_argument("config key p3 needs p1 and p2");
    for (const std::string& a : p1)
        for (const std::string& b : p2) {
            const double va = parse_double(a, "p1");
            const double vb = parse_double(b, "p2");
            if (p3.empty()) {
                cfg.exponents.push_back(ExponentTuple::bilinear(va, vb));
            } else {
                for (const std::string& c : p3)
                    cfg.exponents.push_back(
                        ExponentTuple::trilinear(va, vb, parse_double(c, "p3")));
            }
        }

    for (const std::string& t : split_list(take(kv, "n", ""))) {
        const long long v = parse_int(t, "n");
        if (v < 8 || v > (1 << 20) || !is_pow2(std::uint32_t(v)))
            throw std::invalid_argument("config key n: grid sizes are powers of two >= 8");
        cfg.n_values.push_back(std::uint32_t(v));
    }

    const long long seeds = parse_int(take(kv, "seeds", "1"), "seeds");
    if (seeds < 0) throw std::invalid_argument("config key seeds: negative count");
    cfg.seeds = std::uint32_t(seeds);

    for (const std::string& t : split_list(take(kv, "decay", "")))
        cfg.decays.push_back(parse_double(t, "decay"));
    if (cfg.decays.empty()) cfg.decays.push_back(1.5);

    cfg.k_min = parse_window_edge(take(kv, "kmin", "auto"), "kmin");
    cfg.k_max = parse_window_edge(take(kv, "kmax", "auto"), "kmax");

    const long long threads = parse_int(take(kv, "threads", "0"), "threads");
    if (threads < 0 || threads > 1024)
        throw std::invalid_argument("config key threads: out of range");
    cfg.threads = unsigned(threads);

    reject_leftovers(kv);
    return cfg;
}

SweepConfig parse_sweep_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_sweep_config(in);
}

namespace {

struct TrialKey {
    const TrialRecord* r;
};

std::tuple<const std::string&, const std::string&, double, double, double, double,
           std::uint32_t, std::uint64_t, double, int, int>
record_key(const TrialRecord& r) {
    const double p4 = r.exponents.arity() == 3 ? r.exponents.p4() : 0.0;
    return {r.op,   r.case_id, r.exponents.p1(), r.exponents.p2(), r.exponents.p3(), p4,
            r.n,    r.seed,    r.decay,          r.windowed ? r.k_min : -1,
            r.windowed ? r.k_max : -1};
}

template <typename Fn>
void run_task_queue(std::size_t task_count, unsigned threads, const Fn& body) {
    unsigned workers = threads != 0 ? threads : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > task_count) workers = unsigned(task_count ? task_count : 1);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> bail{false};
    std::mutex err_mx;
    std::exception_ptr err;

    auto worker = [&] {
        while (!bail.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= task_count) break;
            try {
                body(i);
            } catch (...) {
                std::scoped_lock lock(err_mx);
                if (!err) err = std::current_exception();
                bail.store(true, std::memory_order_relaxed);
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

} // namespace

std::vector<TrialRecord> run_sweep(const SweepConfig& cfg) {
    struct Task {
        const OpSpec* op;
        const ExponentTuple* e;
        std::uint32_t n;
        double decay;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const OpSpec& op : cfg.ops)
        for (const ExponentTuple& e : cfg.exponents)
            for (const std::uint32_t n : cfg.n_values)
                for (const double decay : cfg.decays)
                    for (std::uint64_t seed = 0; seed < cfg.seeds; ++seed)
                        tasks.push_back(Task{&op, &e, n, decay, seed});

    std::vector<TrialRecord> recs(tasks.size());
    run_task_queue(tasks.size(), cfg.threads, [&](std::size_t i) {
        const Task& t = tasks[i];
        recs[i] = norm_ratio_trial(*t.op, *t.e, t.seed, t.n, t.decay, cfg.k_min, cfg.k_max);
    });

    std::sort(recs.begin(), recs.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return record_key(a) < record_key(b);
    });
    return recs;
}

void write_trial_csv(std::ostream& out, std::span<const TrialRecord> records) {
    out << "operator,case,p1,p2,p3,p4,n,seed,decay,kmin,kmax,ratio,in_range\n";
    for (const TrialRecord& r : records) {
        out << r.op << ',' << r.case_id << ',' << g17(r.exponents.p1()) << ','
            << g17(r.exponents.p2()) << ',' << g17(r.exponents.p3()) << ',';
        if (r.exponents.arity() == 3) out << g17(r.exponents.p4());
        out << ',' << r.n << ',' << r.seed << ',' << g17(r.decay) << ',';
        if (r.windowed) out << r.k_min;
        out << ',';
        if (r.windowed) out << r.k_max;
        out << ',' << g17(r.ratio) << ',' << to_string(r.verdict) << '\n';
    }
}

std::vector<TrialRecord> sweep_to_csv(const SweepConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output path: " + path);
    std::vector<TrialRecord> recs = run_sweep(cfg);
    write_trial_csv(out, recs);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
    return recs;
}

namespace {

std::vector<double> midpoint_grid(double halfwidth, double step) {
    const long long count = std::llround(2.0 * halfwidth / step);
    if (count < 1)
        throw std::invalid_argument("quadrature box shorter than one step");
    std::vector<double> g(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) g[std::size_t(i)] = -halfwidth + (double(i) + 0.5) * step;
    return g;
}

} // namespace

FormValue counterexample_form(const std::function<cplx(double)>& f1,
                              const std::function<cplx(double)>& f2,
                              const std::function<cplx(double)>& f3,
                              const std::function<double(double)>& phi_hat,
                              const std::function<cplx(double, double, double, double)>& m,
                              double lambda, const QuadratureGrid& grid) {
    if (!f1 || !f2 || !f3 || !phi_hat || !m)
        throw std::invalid_argument("missing evaluator");
    if (!(grid.xi > 0.0) || !(grid.step > 0.0) || !(grid.phi_radius > 0.0))
        throw std::invalid_argument("quadrature box parameters must be positive");
    const bool infinite = std::isinf(lambda) && lambda > 0.0;
    if (!infinite && !(lambda >= 1.0))
        throw std::invalid_argument("lambda must be at least 1, or inf");

    FormValue result;
    if (grid.step > grid.phi_radius / 8.0)
        result.warning = "quadrature step " + g17(grid.step) +
                         " exceeds an eighth of the profile radius " + g17(grid.phi_radius) +
                         "; the value may be under-resolved";

    const std::vector<double> g1 = midpoint_grid(grid.xi, grid.step);
    const std::vector<double> g2 = midpoint_grid(grid.phi_radius, grid.step);
    const std::size_t n1 = g1.size();

    std::vector<cplx> f1v(n1), f2v(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        f1v[i] = f1(g1[i]);
        f2v[i] = f2(g1[i]);
    }
    std::vector<cplx> outer(n1 * n1);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n1; ++j)
            outer[i * n1 + j] = f1v[i] * f2v[j] * f3(g1[i] + g1[j]);

    const double inv = infinite ? 0.0 : 1.0 / lambda;
    cplx total(0.0, 0.0);
    for (const double x2 : g2) {
        for (const double e2 : g2) {
            const double w = phi_hat(x2) * phi_hat(e2) * phi_hat(x2 + e2);
            if (w == 0.0) continue;
            const double u2 = inv * x2;
            const double v2 = inv * e2;
            cplx acc(0.0, 0.0);
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n1; ++j)
                    acc += outer[i * n1 + j] * m(g1[i], u2, g1[j], v2);
            total += w * acc;
        }
    }
    const double h4 = grid.step * grid.step * grid.step * grid.step;
    result.value = total * h4;
    return result;
}

CounterexampleConfig parse_counterexample_config(std::istream& in) {
    auto kv = parse_flat_config(in);
    CounterexampleConfig cfg;
    cfg.grid.xi = parse_double(take(kv, "xi", g17(cfg.grid.xi)), "xi");
    cfg.grid.step = parse_double(take(kv, "step", g17(cfg.grid.step)), "step");
    cfg.grid.phi_radius =
        parse_double(take(kv, "phi_radius", g17(cfg.grid.phi_radius)), "phi_radius");
    cfg.delta = parse_double(take(kv, "delta", g17(cfg.delta)), "delta");
    const std::string lambdas = take(kv, "lambdas", "");
    if (!lambdas.empty()) {
        cfg.lambdas.clear();
        for (const std::string& t : split_list(lambdas))
            cfg.lambdas.push_back(parse_double(t, "lambdas"));
    }
    cfg.m0 = take(kv, "m0", cfg.m0);
    cfg.mtilde = take(kv, "mtilde", cfg.mtilde);
    cfg.p1 = parse_double(take(kv, "p1", g17(cfg.p1)), "p1");
    cfg.p2 = parse_double(take(kv, "p2", g17(cfg.p2)), "p2");
    cfg.p3 = parse_double(take(kv, "p3", g17(cfg.p3)), "p3");
    cfg.x_halfwidth = parse_double(take(kv, "x_halfwidth", g17(cfg.x_halfwidth)), "x_halfwidth");
    cfg.x_step = parse_double(take(kv, "x_step", g17(cfg.x_step)), "x_step");
    reject_leftovers(kv);
    return cfg;
}

CounterexampleConfig parse_counterexample_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_counterexample_config(in);
}

namespace {

double smooth_cutoff(double u) {
    const double a = std::abs(u);
    if (a >= 1.0) return 0.0;
    return std::exp(-u * u / (1.0 - u * u));
}

// 1 on the first axis, smoothly cut inside the aperture |z2| < delta |z1|.
double cone_cut(double z1, double z2, double delta) {
    if (z1 == 0.0) return z2 == 0.0 ? 1.0 : 0.0;
    return smooth_cutoff(z2 / (delta * std::abs(z1)));
}

double mollified_sign(double a, double b) {
    return (a - b) / std::sqrt(a * a + b * b + 0.25);
}

struct LambdaFit {
    double rate = 0.0;
    bool valid = false;
};

LambdaFit fit_rate(std::span<const double> lambdas, std::span<const double> discs) {
    LambdaFit fit;
    if (lambdas.size() < 2) return fit;
    for (const double d : discs)
        if (!(d > 0.0)) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double count = double(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double x = std::log(lambdas[i]);
        const double y = std::log(discs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) return fit;
    fit.rate = -(count * sxy - sx * sy) / denom;
    fit.valid = true;
    return fit;
}

} // namespace

CounterexampleReport counterexample_experiment(const CounterexampleConfig& cfg) {
    if (cfg.m0 == "unbounded")
        throw std::invalid_argument(
            "m0=unbounded names an existence-only construction with no pointwise formula; "
            "this study covers the benign smooth symbol only");
    if (cfg.m0 != "benign" && cfg.m0 != "one")
        throw std::invalid_argument("unknown m0 mode: " + cfg.m0);
    if (cfg.mtilde != "default" && cfg.mtilde != "one")
        throw std::invalid_argument("unknown mtilde mode: " + cfg.mtilde);
    if (!(cfg.delta > 0.0))
        throw std::invalid_argument("delta must be positive");
    if (cfg.lambdas.empty())
        throw std::invalid_argument("lambda list must not be empty");
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        if (!(cfg.lambdas[i] >= 1.0) || !std::isfinite(cfg.lambdas[i]))
            throw std::invalid_argument("lambda values must be finite and at least 1");
        if (i > 0 && !(cfg.lambdas[i] > cfg.lambdas[i - 1]))
            throw std::invalid_argument("lambda values must increase strictly");
    }
    const double ps[3] = {cfg.p1, cfg.p2, cfg.p3};
    for (const double p : ps) require_exponent(p, "exponent");
    if (std::abs(1.0 / cfg.p1 + 1.0 / cfg.p2 + 1.0 / cfg.p3 - 1.0) > 1e-12)
        throw std::invalid_argument("exponents must satisfy 1/p1 + 1/p2 + 1/p3 = 1");
    if (!(cfg.x_halfwidth > 0.0) || !(cfg.x_step > 0.0))
        throw std::invalid_argument("x-grid parameters must be positive");

    const auto f1 = [](double x) { return cplx(std::exp(-(x - 0.7) * (x - 0.7) / 2.0), 0.0); };
    const auto f2 = [](double x) { return cplx(std::exp(-(x + 0.4) * (x + 0.4) / 3.0), 0.0); };
    const auto f3 = [](double x) { return cplx(std::exp(-x * x / 4.0), 0.0); };
    const double radius = cfg.grid.phi_radius;
    const auto phi_hat = [radius](double x) {
        const double t = 1.0 - std::abs(x) / radius;
        return t > 0.0 ? t * t : 0.0;
    };
    const bool with_m0 = cfg.m0 == "benign";
    const bool with_cones = cfg.mtilde == "default";
    const double delta = cfg.delta;
    const auto m = [with_m0, with_cones, delta](double x1, double x2, double e1,
                                                double e2) -> cplx {
        double v = with_m0 ? mollified_sign(x1, e1) : 1.0;
        if (with_cones) v *= cone_cut(x1, e2, delta) * cone_cut(e1, x2, delta);
        return cplx(v, 0.0);
    };

    CounterexampleReport rep;
    rep.config = cfg;
    for (const double lambda : cfg.lambdas) {
        const FormValue fv = counterexample_form(f1, f2, f3, phi_hat, m, lambda, cfg.grid);
        rep.values.push_back(fv.value);
        if (rep.warning.empty()) rep.warning = fv.warning;
    }
    rep.value_inf = counterexample_form(f1, f2, f3, phi_hat, m, kInf, cfg.grid).value;
    for (const cplx v : rep.values) rep.discrepancies.push_back(std::abs(v - rep.value_inf));

    rep.monotone = rep.discrepancies.size() >= 2;
    for (std::size_t i = 0; i + 1 < rep.discrepancies.size(); ++i)
        if (!(rep.discrepancies[i + 1] < rep.discrepancies[i])) rep.monotone = false;
    if (!rep.discrepancies.empty() && rep.discrepancies.front() > 0.0)
        rep.last_to_first = rep.discrepancies.back() / rep.discrepancies.front();
    const LambdaFit fit = fit_rate(cfg.lambdas, rep.discrepancies);
    rep.fitted_rate = fit.valid ? fit.rate : 0.0;

    // physical-side samples by quadrature of the spectra
    const std::vector<double> xg = midpoint_grid(cfg.x_halfwidth, cfg.x_step);
    const std::vector<double> freq = midpoint_grid(cfg.grid.xi, cfg.grid.step);
    const std::vector<double> freq_inner = midpoint_grid(radius, cfg.grid.step);
    const auto synthesize = [&](const std::function<cplx(double)>& spectrum,
                                const std::vector<double>& nodes) {
        std::vector<cplx> vals(xg.size());
        for (std::size_t i = 0; i < xg.size(); ++i) {
            cplx acc(0.0, 0.0);
            for (const double xi : nodes)
                acc += spectrum(xi) * std::polar(1.0, 2.0 * std::numbers::pi * xg[i] * xi);
            vals[i] = acc * cfg.grid.step;
        }
        return vals;
    };
    const std::vector<cplx> fx[3] = {synthesize(f1, freq), synthesize(f2, freq),
                                     synthesize(f3, freq)};
    const auto phi_spectrum = [&phi_hat](double x) { return cplx(phi_hat(x), 0.0); };
    const std::vector<cplx> phix = synthesize(phi_spectrum, freq_inner);

    for (int i = 0; i < 3; ++i) {
        const double p = ps[i];
        std::vector<double> pf(xg.size()), pphi(xg.size());
        for (std::size_t t = 0; t < xg.size(); ++t) {
            pf[t] = std::pow(std::abs(fx[i][t]), p);
            pphi[t] = std::pow(std::abs(phix[t]), p);
        }
        double sf = 0.0, sphi = 0.0;
        for (const double v : pf) sf += v;
        for (const double v : pphi) sphi += v;
        rep.f_norm[i] = std::pow(sf * cfg.x_step, 1.0 / p);
        rep.phi_norm[i] = std::pow(sphi * cfg.x_step, 1.0 / p);

        for (const double lambda : cfg.lambdas) {
            // honest 2-D quadrature of |F_i|^p over the lambda-dilated grid
            double s2 = 0.0;
            const double inv = 1.0 / lambda;
            const double w2 = cfg.x_step * (lambda * cfg.x_step);
            for (std::size_t a = 0; a < xg.size(); ++a) {
                double row = 0.0;
                for (std::size_t b = 0; b < xg.size(); ++b) row += pf[a] * (inv * pphi[b]);
                s2 += row * w2;
            }
            const double F_norm = std::pow(s2, 1.0 / p);
            rep.norm_dev = std::max(rep.norm_dev,
                                    std::abs(F_norm - rep.f_norm[i] * rep.phi_norm[i]));
        }
    }
    return rep;
}

void write_counterexample_report(std::ostream& out, const CounterexampleReport& rep) {
    const CounterexampleConfig& c = rep.config;
    out << "counterexample xi=" << g17(c.grid.xi) << " step=" << g17(c.grid.step)
        << " phi_radius=" << g17(c.grid.phi_radius) << " delta=" << g17(c.delta)
        << " m0=" << c.m0 << " mtilde=" << c.mtilde << '\n';
    if (!rep.warning.empty()) out << "warning " << rep.warning << '\n';
    for (std::size_t i = 0; i < rep.values.size(); ++i)
        out << "lambda=" << g17(c.lambdas[i]) << " re=" << g17(rep.values[i].real())
            << " im=" << g17(rep.values[i].imag()) << " disc=" << g17(rep.discrepancies[i])
            << '\n';
    out << "lambda=inf re=" << g17(rep.value_inf.real()) << " im=" << g17(rep.value_inf.imag())
        << '\n';
    out << "monotone=" << (rep.monotone ? 1 : 0) << " last_to_first=" << g17(rep.last_to_first)
        << " fitted_rate=" << g17(rep.fitted_rate) << '\n';
    const double ps[3] = {c.p1, c.p2, c.p3};
    for (int i = 0; i < 3; ++i)
        out << "norms i=" << (i + 1) << " p=" << g17(ps[i]) << " f=" << g17(rep.f_norm[i])
            << " phi=" << g17(rep.phi_norm[i]) << '\n';
    out << "norm_dev=" << g17(rep.norm_dev) << '\n';
}

RefinementReport refinement_study(const OpSpec& spec, const ExponentTuple& e,
                                  std::span<const std::uint32_t> n_values, std::uint32_t seeds,
                                  double decay, double alarm_threshold) {
    if (n_values.empty())
        throw std::invalid_argument("refinement needs at least one grid size");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (!is_pow2(n_values[i]) || n_values[i] < 8)
            throw std::invalid_argument("grid sizes are powers of two >= 8");
        if (i > 0 && n_values[i] <= n_values[i - 1])
            throw std::invalid_argument("grid sizes must ascend");
    }
    if (seeds == 0) throw std::invalid_argument("refinement needs at least one seed");
    if (!(alarm_threshold > 0.0))
        throw std::invalid_argument("alarm threshold must be positive");

    RefinementReport rep;
    rep.op = spec;
    rep.exponents = e;
    rep.verdict = known_range(default_case_for(spec.op), e);
    rep.seeds = seeds;
    rep.decay = decay;
    rep.alarm_threshold = alarm_threshold;

    for (const std::uint32_t n : n_values) {
        std::vector<double> ratios(seeds);
        for (std::uint32_t s = 0; s < seeds; ++s)
            ratios[s] = norm_ratio_trial(spec, e, s, n, decay).ratio;
        std::sort(ratios.begin(), ratios.end());
        RefinementRow row;
        row.n = n;
        row.max_ratio = ratios.back();
        row.median_ratio = seeds % 2 == 1
                               ? ratios[seeds / 2]
                               : 0.5 * (ratios[seeds / 2 - 1] + ratios[seeds / 2]);
        rep.rows.push_back(row);
    }

    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
        const double prev = rep.rows[i].max_ratio;
        const double next = rep.rows[i + 1].max_ratio;
        rep.growth.push_back(prev == 0.0 ? (next == 0.0 ? 1.0 : kInf) : next / prev);
    }
    const double first = rep.rows.front().max_ratio;
    const double last = rep.rows.back().max_ratio;
    rep.overall_growth = first == 0.0 ? (last == 0.0 ? 1.0 : kInf) : last / first;

    if (rep.verdict == RangeVerdict::inside)
        for (const double g : rep.growth)
            if (g > alarm_threshold) rep.alarm = true;
    return rep;
}

void write_refinement_report(std::ostream& out, const RefinementReport& rep) {
    out << "refinement op=" << rep.op.op << " symbol=" << rep.op.symbol
        << " case=" << default_case_for(rep.op.op) << " verdict=" << to_string(rep.verdict)
        << " seeds=" << rep.seeds << " decay=" << g17(rep.decay)
        << " threshold=" << g17(rep.alarm_threshold) << '\n';
    out << "exponents p1=" << g17(rep.exponents.p1()) << " p2=" << g17(rep.exponents.p2())
        << " p3=" << g17(rep.exponents.p3());
    if (rep.exponents.arity() == 3) out << " p4=" << g17(rep.exponents.p4());
    out << " dual=" << g17(rep.exponents.dual()) << '\n';
    for (const RefinementRow& row : rep.rows)
        out << "n=" << row.n << " max=" << g17(row.max_ratio)
            << " median=" << g17(row.median_ratio) << '\n';
    for (std::size_t i = 0; i < rep.growth.size(); ++i)
        out << "growth from n=" << rep.rows[i].n << " to n=" << rep.rows[i + 1].n
            << " factor=" << g17(rep.growth[i]) << '\n';
    out << "overall_growth=" << g17(rep.overall_growth) << " alarm=" << (rep.alarm ? 1 : 0)
        << '\n';
}

} // namespace mpfw
