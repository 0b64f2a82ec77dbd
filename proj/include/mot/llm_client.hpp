#pragma once

// Text generation boundary: prompt rendering, a scripted stub backend, a
// chat-completions HTTP backend with retries, and bounded parallel fan-out.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mot/data.hpp"
#include "mot/io.hpp"
#include "mot/prompts.hpp"
#include "mot/rationale.hpp"

namespace mot {

class backend_unavailable : public backend_error {
public:
    explicit backend_unavailable(const std::string& what) : backend_error("BackendUnavailable: " + what) {}
};

class auth_error : public backend_error {
public:
    explicit auth_error(const std::string& what) : backend_error("AuthError: " + what) {}
};

class stub_miss : public backend_error {
public:
    explicit stub_miss(const std::string& key) : backend_error("StubMiss: no scripted text for " + key) {}
};

struct gen_request {
    std::string prompt;
    double temperature = 1.0;
    int max_tokens = 2048;
    int n_samples = 10;
    std::optional<std::uint64_t> seed;
    // Stub lookup key: problem id, channel (a modality name or "judge"),
    // and sample indices first_sample .. first_sample + n_samples - 1.
    std::string problem_id;
    std::string channel;
    int first_sample = 0;
    // Overrides the backend's default model when non-empty.
    std::string model;
};

class backend {
public:
    virtual ~backend() = default;
    // Exactly r.n_samples texts on success.
    virtual std::vector<std::string> generate(const gen_request& r) = 0;
    virtual std::string describe() const = 0;
};

// ---------------------------------------------------------------------------
// Stub backend

// Table rows: {problem_id, modality, sample_index, text, model?}. A row with
// a model only answers requests for that model; rows without one answer any.
class stub_backend : public backend {
public:
    struct request_record {
        std::string problem_id;
        std::string channel;
        std::string model;
        std::string prompt;
        int first_sample;
        int n_samples;
    };

    stub_backend() = default;

    explicit stub_backend(const std::filesystem::path& table) : source_(table.string()) {
        for_each_jsonl(table, [&](std::size_t line, const nlohmann::json& j) {
            try {
                add(j.at("problem_id").get<std::string>(), j.at("modality").get<std::string>(),
                    j.at("sample_index").get<int>(), j.at("text").get<std::string>(), j.value("model", ""));
            } catch (const nlohmann::json::exception&) {
                throw schema_error(table.string(), line, "stub rows need problem_id, modality, sample_index, text");
            }
        });
    }

    void add(const std::string& problem_id, const std::string& channel, int sample_index, std::string text,
             const std::string& model = "") {
        table_[{model, problem_id, channel, sample_index}] = std::move(text);
    }

    std::vector<std::string> generate(const gen_request& r) override {
        {
            std::lock_guard lock(mu_);
            log_.push_back({r.problem_id, r.channel, r.model, r.prompt, r.first_sample, r.n_samples});
        }
        std::vector<std::string> out;
        for (int i = r.first_sample; i < r.first_sample + r.n_samples; ++i) {
            auto it = table_.find({r.model, r.problem_id, r.channel, i});
            if (it == table_.end() && !r.model.empty()) it = table_.find({"", r.problem_id, r.channel, i});
            if (it == table_.end())
                throw stub_miss("(" + r.problem_id + ", " + r.channel + ", " + std::to_string(i) +
                                (r.model.empty() ? "" : ", model " + r.model) + ")");
            out.push_back(it->second);
        }
        return out;
    }

    std::string describe() const override { return "stub:" + source_; }

    std::vector<request_record> requests() const {
        std::lock_guard lock(mu_);
        return log_;
    }

private:
    using key = std::tuple<std::string, std::string, std::string, int>;
    std::map<key, std::string> table_;
    std::string source_ = "<memory>";
    mutable std::mutex mu_;
    std::vector<request_record> log_;
};

// ---------------------------------------------------------------------------
// Remote backend

struct retry_policy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{500};
    double factor = 2.0;
};

struct remote_options {
    std::string base_url;  // scheme://host[:port][/prefix], e.g. http://127.0.0.1:8000/v1
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
    retry_policy retry;
};

class remote_backend : public backend {
public:
    explicit remote_backend(remote_options opt) : opt_(std::move(opt)) {
        auto scheme = opt_.base_url.find("://");
        if (scheme == std::string::npos) throw usage_error("remote URL needs a scheme: " + opt_.base_url);
        auto path = opt_.base_url.find('/', scheme + 3);
        origin_ = opt_.base_url.substr(0, path);
        prefix_ = path == std::string::npos ? "" : opt_.base_url.substr(path);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        if (opt_.model.empty()) throw usage_error("remote backend needs a model name");
    }

    std::vector<std::string> generate(const gen_request& r) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(opt_.timeout);
        client.set_read_timeout(opt_.timeout);
        client.set_write_timeout(opt_.timeout);
        httplib::Headers headers;
        if (const char* key = std::getenv(opt_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        std::vector<std::string> texts;
        int failures = 0;
        auto delay = opt_.retry.initial_delay;
        std::string last_error;
        while (static_cast<int>(texts.size()) < r.n_samples) {
            nlohmann::ordered_json body;
            body["model"] = r.model.empty() ? opt_.model : r.model;
            body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", r.prompt}}});
            body["temperature"] = r.temperature;
            body["max_tokens"] = r.max_tokens;
            body["n"] = r.n_samples - static_cast<int>(texts.size());
            if (r.seed) body["seed"] = *r.seed + texts.size();

            auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
            std::size_t got = 0;
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
            } else if (res->status == 401 || res->status == 403) {
                throw auth_error("endpoint rejected credentials from $" + opt_.api_key_env + " (HTTP " +
                                 std::to_string(res->status) + ")");
            } else if (res->status != 200) {
                last_error = "HTTP " + std::to_string(res->status);
            } else {
                try {
                    auto j = nlohmann::json::parse(res->body);
                    for (const auto& c : j.at("choices")) {
                        if (static_cast<int>(texts.size()) >= r.n_samples) break;
                        texts.push_back(c.at("message").at("content").get<std::string>());
                        ++got;
                    }
                    if (got == 0) last_error = "response held no choices";
                } catch (const nlohmann::json::exception& e) {
                    last_error = std::string("malformed response: ") + e.what();
                }
            }
            if (got > 0) continue;
            if (++failures >= opt_.retry.max_attempts)
                throw backend_unavailable(origin_ + prefix_ + " after " + std::to_string(failures) +
                                          " attempts: " + last_error);
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * opt_.retry.factor));
        }
        return texts;
    }

    std::string describe() const override { return "remote:" + opt_.model + "@" + opt_.base_url; }

private:
    remote_options opt_;
    std::string origin_;
    std::string prefix_;
};

// "stub:PATH" or "remote:MODEL@URL".
struct backend_spec {
    enum class kind { stub, remote } type = kind::stub;
    std::string stub_path;
    std::string model;
    std::string url;
    std::string api_key_env = "OPENAI_API_KEY";

    static backend_spec parse(const std::string& text, const std::string& api_key_env = "OPENAI_API_KEY") {
        backend_spec s;
        s.api_key_env = api_key_env;
        if (text.rfind("stub:", 0) == 0) {
            s.type = kind::stub;
            s.stub_path = text.substr(5);
            if (s.stub_path.empty()) throw usage_error("stub backend needs a table path");
        } else if (text.rfind("remote:", 0) == 0) {
            s.type = kind::remote;
            auto rest = text.substr(7);
            auto at = rest.find('@');
            if (at == std::string::npos || at == 0 || at + 1 == rest.size())
                throw usage_error("remote backend must be remote:MODEL@URL");
            s.model = rest.substr(0, at);
            s.url = rest.substr(at + 1);
        } else {
            throw usage_error("backend must be stub:PATH or remote:MODEL@URL, got '" + text + "'");
        }
        return s;
    }
};

inline std::shared_ptr<backend> make_backend(const backend_spec& s, retry_policy retry = {}) {
    if (s.type == backend_spec::kind::stub) return std::make_shared<stub_backend>(s.stub_path);
    remote_options o;
    o.base_url = s.url;
    o.model = s.model;
    o.api_key_env = s.api_key_env;
    o.retry = retry;
    return std::make_shared<remote_backend>(std::move(o));
}

// ---------------------------------------------------------------------------
// Parallel fan-out

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// stops further dispatch and is rethrown once all workers finish.
inline void parallel_for_each(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            while (!stop) {
                auto i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                    stop = true;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Prompts

struct fewshot_example {
    std::string premises;
    std::string conclusion;
    // Output following the opening tag: rationale, close tag, answer block.
    std::string target;
};

struct fewshot_set {
    modality mode = modality::nl;
    std::vector<fewshot_example> examples;
};

inline std::string render_problem_block(const std::string& premises, const std::string& conclusion) {
    std::string out;
    out += "<premises>\n" + premises + "\n</premises>\n\n";
    out += "<conclusion>\n" + conclusion + "\n</conclusion>\n\n";
    out += "<question>\nIs the following statement true, false, or uncertain? " + conclusion + "\n</question>\n\n";
    out += prompts::options_block;
    return out;
}

// Instruction, optional exemplars ("### Example N" each), then the problem,
// ending in the modality's opening tag.
inline std::string build_prompt(const problem& p, modality m, const fewshot_set* fewshot = nullptr) {
    std::string out(prompts::instruction);
    if (fewshot) {
        int n = 0;
        for (const auto& ex : fewshot->examples) {
            out += prompts::example_delimiter;
            out += std::to_string(++n) + "\n\n";
            out += render_problem_block(ex.premises, ex.conclusion);
            out += elicitor(m);
            out += "\n" + ex.target + "\n\n";
        }
    }
    out += prompts::problem_lead;
    out += render_problem_block(p.premises, p.conclusion);
    out += elicitor(m);
    return out;
}

// JSONL rows {premises, conclusion, target}; every target must yield a valid
// trace with an answer.
inline fewshot_set load_fewshot(const std::filesystem::path& path, modality m) {
    fewshot_set set{m, {}};
    for_each_jsonl(path, [&](std::size_t line, const nlohmann::json& j) {
        fewshot_example ex;
        try {
            ex.premises = j.at("premises").get<std::string>();
            ex.conclusion = j.at("conclusion").get<std::string>();
            ex.target = j.at("target").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw schema_error(path.string(), line, "few-shot rows need premises, conclusion, target");
        }
        auto tr = extract_trace(std::string(elicitor(m)) + "\n" + ex.target, m, "fewshot");
        if (!tr.valid || !tr.predicted)
            throw schema_error(path.string(), line, "few-shot target is not a valid " + to_string(m) + " trace");
        set.examples.push_back(std::move(ex));
    });
    return set;
}

// fixtures-style directory holding nl.jsonl, code.jsonl, truth_table.jsonl.
inline std::map<modality, fewshot_set> load_fewshot_dir(const std::filesystem::path& dir) {
    std::map<modality, fewshot_set> out;
    for (auto m : all_modalities) out[m] = load_fewshot(dir / (to_string(m) + ".jsonl"), m);
    return out;
}

}  // namespace mot
