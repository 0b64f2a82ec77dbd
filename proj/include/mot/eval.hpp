#pragma once

// Metrics over prediction logs: accuracy, pass@k, sampled budget curves,
// modality overlap and depth-stratified accuracy.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mot/answer.hpp"
#include "mot/data.hpp"
#include "mot/io.hpp"
#include "mot/random.hpp"
#include "mot/rationale.hpp"

namespace mot {

class empty_selection : public data_error {
public:
    explicit empty_selection(const std::string& what) : data_error("EmptySelection: " + what) {}
};

class missing_modality : public data_error {
public:
    explicit missing_modality(const std::string& pid, const std::string& m)
        : data_error("MissingModality: problem " + pid + " has no " + m + " predictions") {}
};

class missing_depth : public data_error {
public:
    explicit missing_depth(const std::string& pid) : data_error("MissingDepth: problem " + pid + " has no depth") {}
};

// One scored sample. `modality` is a wire name: nl, code, truth_table, or an
// aggregate mode such as mot or sc.
struct prediction {
    std::string problem_id;
    std::string modality;
    std::size_t sample_index = 0;
    std::optional<answer> predicted;
    bool correct = false;

    bool operator==(const prediction&) const = default;
};

inline nlohmann::ordered_json to_json(const prediction& p) {
    nlohmann::ordered_json j;
    j["problem_id"] = p.problem_id;
    j["modality"] = p.modality;
    j["sample_index"] = p.sample_index;
    j["answer"] = p.predicted ? nlohmann::ordered_json(to_string(*p.predicted)) : nlohmann::ordered_json(nullptr);
    j["correct"] = p.correct;
    return j;
}

inline prediction score(std::string problem_id, std::string modality, std::size_t sample, std::optional<answer> a,
                        answer gold) {
    return {std::move(problem_id), std::move(modality), sample, a, a == gold};
}

// Records grouped into pools keyed by (problem, modality), each sorted by
// sample index.
class prediction_log {
public:
    using pool = std::vector<prediction>;

    prediction_log() = default;
    explicit prediction_log(std::vector<prediction> records) {
        for (auto& r : records) add(std::move(r));
    }

    void add(prediction p) {
        auto& pl = pools_[{p.problem_id, p.modality}];
        auto at = std::upper_bound(pl.begin(), pl.end(), p.sample_index,
                                   [](std::size_t s, const prediction& q) { return s < q.sample_index; });
        pl.insert(at, std::move(p));
        ++size_;
    }

    std::size_t size() const { return size_; }

    const pool* find(const std::string& pid, const std::string& modality) const {
        auto it = pools_.find({pid, modality});
        return it == pools_.end() ? nullptr : &it->second;
    }

    // Sorted problem ids having at least one record of `modality`.
    std::vector<std::string> problems(const std::string& modality) const {
        std::vector<std::string> out;
        for (const auto& [key, pl] : pools_)
            if (key.second == modality) out.push_back(key.first);
        return out;
    }

    std::vector<std::string> all_problems() const {
        std::set<std::string> s;
        for (const auto& [key, pl] : pools_) s.insert(key.first);
        return {s.begin(), s.end()};
    }

    std::set<std::string> modalities() const {
        std::set<std::string> s;
        for (const auto& [key, pl] : pools_) s.insert(key.second);
        return s;
    }

    std::vector<prediction> records() const {
        std::vector<prediction> out;
        for (const auto& [key, pl] : pools_) out.insert(out.end(), pl.begin(), pl.end());
        return out;
    }

private:
    std::map<std::pair<std::string, std::string>, pool> pools_;
    std::size_t size_ = 0;
};

inline prediction_log load_prediction_log(const std::filesystem::path& path) {
    prediction_log log;
    for_each_jsonl(path, [&](std::size_t line, const nlohmann::json& j) {
        prediction p;
        try {
            p.problem_id = j.at("problem_id").get<std::string>();
            p.modality = j.at("modality").get<std::string>();
            p.sample_index = j.at("sample_index").get<std::size_t>();
            if (!j.at("answer").is_null()) {
                p.predicted = answer_from_string(j["answer"].get<std::string>());
                if (!p.predicted) throw schema_error(path.string(), line, "answer must be A, B, C or null");
            }
            p.correct = j.at("correct").get<bool>();
        } catch (const nlohmann::json::exception&) {
            throw schema_error(path.string(), line, "prediction rows need problem_id, modality, sample_index, answer, correct");
        }
        log.add(std::move(p));
    });
    return log;
}

inline std::string render_prediction_log(const prediction_log& log, const nlohmann::ordered_json& header_fields) {
    jsonl_writer w("prediction_log", header_fields);
    for (const auto& r : log.records()) w.add(to_json(r));
    return w.str();
}

// ---------------------------------------------------------------------------
// Accuracy

using problem_filter = std::function<bool(const std::string& problem_id)>;

// Percent of problems whose first sample of `modality` is correct.
inline double accuracy(const prediction_log& log, const std::string& modality, const problem_filter& keep = {}) {
    std::size_t total = 0, right = 0;
    for (const auto& pid : log.problems(modality)) {
        if (keep && !keep(pid)) continue;
        const auto& pl = *log.find(pid, modality);
        ++total;
        if (pl.front().correct) ++right;
    }
    if (total == 0) throw empty_selection("no " + modality + " predictions match the filter");
    return 100.0 * static_cast<double>(right) / static_cast<double>(total);
}

struct depth_bucket {
    int lo = 0;
    int hi = 0;  // inclusive
};

struct bucket_accuracy {
    depth_bucket bucket;
    std::size_t problems = 0;
    double accuracy = 0;
};

// Accuracy per closed depth range [lo, hi]; ranges may overlap. Buckets
// with no problems are omitted from the result.
inline std::vector<bucket_accuracy> depth_stratified(const prediction_log& log, const std::string& modality,
                                                     const std::map<std::string, problem>& problems,
                                                     const std::vector<depth_bucket>& buckets) {
    for (const auto& pid : log.problems(modality)) {
        auto it = problems.find(pid);
        if (it == problems.end() || !it->second.depth) throw missing_depth(pid);
    }
    std::vector<bucket_accuracy> out;
    for (const auto& b : buckets) {
        auto in_bucket = [&](const std::string& pid) {
            int d = *problems.at(pid).depth;
            return d >= b.lo && d <= b.hi;
        };
        std::size_t n = 0;
        for (const auto& pid : log.problems(modality)) n += in_bucket(pid) ? 1 : 0;
        if (n == 0) continue;
        out.push_back({b, n, accuracy(log, modality, in_bucket)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// pass@k

struct pass_fraction {
    unsigned __int128 successes = 0;  // size-k subsets holding a correct sample
    unsigned __int128 total = 0;      // all size-k subsets
};

namespace detail {

// C(n, k), or nullopt when it does not fit in 128 bits.
inline std::optional<unsigned __int128> binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    const unsigned __int128 max = ~static_cast<unsigned __int128>(0);
    for (std::uint64_t i = 1; i <= k; ++i) {
        // r * (n - k + i) / i stays integral; guard the multiply.
        unsigned __int128 f = n - k + i;
        if (r > max / f) return std::nullopt;
        r = r * f / i;
    }
    return r;
}

inline void check_pass_args(std::int64_t n, std::int64_t c, std::int64_t k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n)
        throw domain_error("pass@k needs 0 <= c <= n and 1 <= k <= n (got n=" + std::to_string(n) +
                           ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
}

}  // namespace detail

// Exact subset counts, when C(n, k) fits in 128 bits.
inline std::optional<pass_fraction> pass_at_k_fraction(std::int64_t n, std::int64_t c, std::int64_t k) {
    detail::check_pass_args(n, c, k);
    auto total = detail::binomial(n, k);
    auto fail = detail::binomial(n - c, k);
    if (!total || !fail) return std::nullopt;
    return pass_fraction{*total - *fail, *total};
}

// 1 - C(n-c, k) / C(n, k).
inline double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
    if (auto f = pass_at_k_fraction(n, c, k))
        return 1.0 - static_cast<double>(static_cast<long double>(f->total - f->successes) /
                                         static_cast<long double>(f->total));
    if (n - c < k) return 1.0;
    long double miss = 1.0L;
    for (std::int64_t i = n - c + 1; i <= n; ++i) miss *= 1.0L - static_cast<long double>(k) / static_cast<long double>(i);
    return static_cast<double>(1.0L - miss);
}

// ---------------------------------------------------------------------------
// Budget curves

enum class budget_mode { pass, vote };

struct budget_point {
    std::size_t k = 0;
    double mean = 0;
    double stddev = 0;
    std::size_t runs = 0;

    bool operator==(const budget_point&) const = default;
};

namespace detail {

inline std::pair<double, double> mean_and_population_stddev(const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

// Pass mode: any correct draw. Vote mode: plurality answer among non-None
// draws with ties broken by `rng`; correct if that answer's records are.
inline bool score_draws(const std::vector<const prediction*>& drawn, budget_mode mode, rng_t& rng) {
    if (mode == budget_mode::pass)
        return std::any_of(drawn.begin(), drawn.end(), [](const prediction* p) { return p->correct; });
    std::array<std::size_t, 3> votes{};
    std::array<bool, 3> right{};
    for (const auto* p : drawn) {
        if (!p->predicted) continue;
        auto i = static_cast<std::size_t>(*p->predicted);
        ++votes[i];
        right[i] = right[i] || p->correct;
    }
    auto best = *std::max_element(votes.begin(), votes.end());
    if (best == 0) return false;
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < 3; ++i)
        if (votes[i] == best) tied.push_back(i);
    return right[tied[tied.size() == 1 ? 0 : uniform_below(rng, tied.size())]];
}

inline const prediction_log::pool& require_pool(const prediction_log& log, const std::string& pid,
                                                const std::string& modality, std::size_t need) {
    const auto* pl = log.find(pid, modality);
    if (!pl) throw missing_modality(pid, modality);
    if (pl->size() < need)
        throw domain_error("pool of " + modality + " for " + pid + " holds " + std::to_string(pl->size()) +
                           " samples, budget needs " + std::to_string(need));
    return *pl;
}

}  // namespace detail

// Draws k samples without replacement from each problem's `modality` pool,
// `runs` times; reports mean and population stddev of the percent solved.
inline budget_point sot_budget_eval(const prediction_log& log, const std::string& modality, std::size_t k,
                                    std::size_t runs, std::uint64_t seed, budget_mode mode = budget_mode::pass) {
    if (k == 0 || runs == 0) throw domain_error("budget and runs must be positive");
    auto pids = log.problems(modality);
    if (pids.empty()) throw empty_selection("no " + modality + " predictions");
    std::vector<double> scores;
    for (std::size_t r = 0; r < runs; ++r) {
        rng_t rng(derive_seed(seed, "sot/" + modality + "/" + std::to_string(k) + "/" + std::to_string(r)));
        std::size_t solved = 0;
        for (const auto& pid : pids) {
            const auto& pl = detail::require_pool(log, pid, modality, k);
            std::vector<const prediction*> drawn;
            for (auto i : sample_without_replacement(rng, pl.size(), k)) drawn.push_back(&pl[i]);
            solved += detail::score_draws(drawn, mode, rng) ? 1 : 0;
        }
        scores.push_back(100.0 * static_cast<double>(solved) / static_cast<double>(pids.size()));
    }
    auto [mean, sd] = detail::mean_and_population_stddev(scores);
    return {k, mean, sd, runs};
}

// The three reasoning modalities present in the log, in canonical order.
inline std::vector<std::string> base_modalities(const prediction_log& log) {
    std::vector<std::string> out;
    auto present = log.modalities();
    for (auto m : all_modalities)
        if (present.count(to_string(m))) out.push_back(to_string(m));
    return out;
}

// As sot_budget_eval, drawing k / N_T samples from each of the N_T
// modalities present in the log.
inline budget_point mot_budget_eval(const prediction_log& log, std::size_t k, std::size_t runs, std::uint64_t seed,
                                    budget_mode mode = budget_mode::pass) {
    auto mods = base_modalities(log);
    if (mods.empty()) throw empty_selection("no nl, code or truth_table predictions");
    if (k == 0 || runs == 0) throw domain_error("budget and runs must be positive");
    if (k % mods.size() != 0)
        throw domain_error("budget " + std::to_string(k) + " is not divisible by " + std::to_string(mods.size()) +
                           " modalities");
    const std::size_t per = k / mods.size();
    auto pids = log.all_problems();
    std::vector<double> scores;
    for (std::size_t r = 0; r < runs; ++r) {
        rng_t rng(derive_seed(seed, "mot/" + std::to_string(k) + "/" + std::to_string(r)));
        std::size_t solved = 0;
        for (const auto& pid : pids) {
            std::vector<const prediction*> drawn;
            for (const auto& m : mods) {
                const auto& pl = detail::require_pool(log, pid, m, per);
                for (auto i : sample_without_replacement(rng, pl.size(), per)) drawn.push_back(&pl[i]);
            }
            solved += detail::score_draws(drawn, mode, rng) ? 1 : 0;
        }
        scores.push_back(100.0 * static_cast<double>(solved) / static_cast<double>(pids.size()));
    }
    auto [mean, sd] = detail::mean_and_population_stddev(scores);
    return {k, mean, sd, runs};
}

// "# {header json}", "# k mean stddev", then one row per point.
inline std::string render_curve(const std::vector<budget_point>& points, const nlohmann::ordered_json& header) {
    std::ostringstream out;
    out << "# " << header.dump() << "\n# k mean stddev\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& p : points) out << p.k << ' ' << p.mean << ' ' << p.stddev << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Overlap

struct overlap_stats {
    std::size_t only_nl = 0, only_code = 0, only_tt = 0;
    std::size_t pair_nl_code = 0, pair_nl_tt = 0, pair_code_tt = 0;  // exactly those two
    std::size_t all_three = 0;
    std::size_t union_code_nl = 0, union_all = 0;
    std::size_t problems = 0;

    double oracle_upper_bound() const {
        return problems ? 100.0 * static_cast<double>(union_all) / static_cast<double>(problems) : 0.0;
    }
    std::size_t unique_coverage() const { return only_nl + only_code + only_tt; }
    std::size_t complementary_coverage() const { return pair_nl_code + pair_nl_tt + pair_code_tt + all_three; }

    bool operator==(const overlap_stats&) const = default;
};

enum class solved_by { first_sample, any_in_pool };

// Every problem in the log must carry all three modalities.
inline overlap_stats compute_overlap(const prediction_log& log, solved_by rule = solved_by::first_sample) {
    overlap_stats s;
    std::set<std::string> pids;
    for (auto m : all_modalities)
        for (const auto& pid : log.problems(to_string(m))) pids.insert(pid);
    for (const auto& pid : pids) {
        std::array<bool, 3> ok{};
        for (auto m : all_modalities) {
            const auto* pl = log.find(pid, to_string(m));
            if (!pl) throw missing_modality(pid, to_string(m));
            ok[index_of(m)] = rule == solved_by::first_sample
                                  ? pl->front().correct
                                  : std::any_of(pl->begin(), pl->end(), [](const prediction& p) { return p.correct; });
        }
        bool nl = ok[0], code = ok[1], tt = ok[2];
        ++s.problems;
        if (nl && !code && !tt) ++s.only_nl;
        if (!nl && code && !tt) ++s.only_code;
        if (!nl && !code && tt) ++s.only_tt;
        if (nl && code && !tt) ++s.pair_nl_code;
        if (nl && !code && tt) ++s.pair_nl_tt;
        if (!nl && code && tt) ++s.pair_code_tt;
        if (nl && code && tt) ++s.all_three;
        if (nl || code) ++s.union_code_nl;
        if (nl || code || tt) ++s.union_all;
    }
    return s;
}

inline nlohmann::ordered_json to_json(const overlap_stats& s) {
    nlohmann::ordered_json j;
    j["only_NL"] = s.only_nl;
    j["only_Code"] = s.only_code;
    j["only_TT"] = s.only_tt;
    j["NL_Code_only"] = s.pair_nl_code;
    j["NL_TT_only"] = s.pair_nl_tt;
    j["Code_TT_only"] = s.pair_code_tt;
    j["all_three"] = s.all_three;
    j["union_Code_NL"] = s.union_code_nl;
    j["union_all"] = s.union_all;
    j["problems"] = s.problems;
    return j;
}

}  // namespace mot
