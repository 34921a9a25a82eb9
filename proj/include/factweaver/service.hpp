#pragma once

// HTTP service: dataset upload, story generation, editing, rendering and
// share links. Everything lives under one data directory:
//
//   datasets/<id>/data.csv, datasets/<id>/meta.json
//   stories/<id>.json
//   shares/<token>.json, shares/<token>.body
//
// Story mutations take an optional "revision"; a stale one gets 409.

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"

#include "factweaver/document.hpp"
#include "factweaver/errors.hpp"
#include "factweaver/table.hpp"

namespace factweaver::service {

namespace fs = std::filesystem;

inline constexpr std::size_t kMaxUploadBytes = 50u * 1024u * 1024u;

struct ServiceConfig {
    fs::path data_dir;
    std::size_t max_upload_bytes = kMaxUploadBytes;
    /// Prefix for share URLs, e.g. "http://host:8080". Empty gives relative URLs.
    std::string public_base;
};

/// Thrown inside handlers and turned into {code, message, details}.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    json details = json::array();
};

namespace detail {

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw HttpError{404, "not_found", "missing file " + p.filename().string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write-then-rename so readers never see half a document.
inline void write_file(const fs::path& p, const std::string& bytes) {
    fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << bytes;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

inline std::string random_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

inline bool safe_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    return true;
}

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json schema_summary(const DataTable& table) {
    json fields = json::array();
    for (const auto& f : table.schema()) {
        json e = {{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
        if (f.kind == FieldKind::numerical) {
            e["min"] = f.min;
            e["max"] = f.max;
        } else {
            e["cardinality"] = f.distinct_values.size();
            e["values"] = f.distinct_values;
        }
        fields.push_back(std::move(e));
    }
    return fields;
}

inline json parse_body(const httplib::Request& req) {
    try {
        return req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::exception& e) {
        throw HttpError{400, "bad_request", std::string("body is not valid JSON: ") + e.what()};
    }
}

inline std::size_t parse_index(const std::string& s) {
    if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw HttpError{404, "not_found", "no fact at index " + s};
    return static_cast<std::size_t>(std::stoul(s));
}

/// Generation parameters from a request body. Weights may be an object or
/// a [d, l, c] array; a sum within 1e-6 of one is renormalized.
inline GenerationParams generation_params(const json& j) {
    try {
        GenerationParams p;
        p.goal.max_length = j.value("max_length", std::size_t{6});
        if (j.contains("min_information_bits") && !j["min_information_bits"].is_null())
            p.goal.min_information_bits = j["min_information_bits"].get<double>();
        if (j.contains("time_budget_seconds") && !j["time_budget_seconds"].is_null())
            p.goal.time_budget_seconds = j["time_budget_seconds"].get<double>();
        if (j.contains("iteration_budget") && !j["iteration_budget"].is_null()) {
            const auto v = j["iteration_budget"].get<long long>();
            if (v <= 0) throw HttpError{400, "bad_request", "iteration budget must be positive"};
            p.goal.iteration_budget = static_cast<std::size_t>(v);
        }
        if (!p.goal.time_budget_seconds && !p.goal.iteration_budget) p.goal.time_budget_seconds = 10.0;
        if (j.contains("weights")) {
            const auto& w = j["weights"];
            if (w.is_array() && w.size() == 3)
                p.weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
            else if (w.is_object())
                p.weights = {w.at("diversity").get<double>(), w.at("logicality").get<double>(),
                             w.at("integrity").get<double>()};
            else
                throw HttpError{400, "bad_request", "weights must be {diversity, logicality, integrity} or [d, l, c]"};
        }
        p.weights = normalized(p.weights);
        p.chart_diversity = j.value("chart_diversity", 0.0);
        if (!(p.chart_diversity >= 0 && p.chart_diversity <= 1))
            throw HttpError{400, "bad_request", "chart_diversity must lie in [0, 1]"};
        p.seed = j.value("seed", std::uint64_t{0});
        p.fanout = j.value("fanout", std::size_t{20});
        p.simulation_budget = j.value("simulation_budget", std::size_t{8});
        if (p.fanout == 0 || p.simulation_budget == 0)
            throw HttpError{400, "bad_request", "fanout and simulation_budget must be positive"};
        p.goal.check();
        return p;
    } catch (const json::exception& e) {
        throw HttpError{400, "bad_request", std::string("bad generation parameters: ") + e.what()};
    }
}

}  // namespace detail

class Service {
public:
    explicit Service(ServiceConfig config) : config_(std::move(config)) {
        fs::create_directories(config_.data_dir / "datasets");
        fs::create_directories(config_.data_dir / "stories");
        fs::create_directories(config_.data_dir / "shares");
    }

    const ServiceConfig& config() const noexcept { return config_; }

    void install(httplib::Server& server) {
        server.set_payload_max_length(config_.max_upload_bytes);
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
            const bool big = res.status == 413;
            json body = {{"code", big ? "payload_too_large" : "http_" + std::to_string(res.status)},
                         {"message", big ? "upload exceeds the size limit" : httplib::status_message(res.status)},
                         {"details", json::array()}};
            res.set_content(body.dump(), "application/json");
            return httplib::Server::HandlerResponse::Handled;
        });
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"}});
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Post("/datasets", wrap([this](const auto& req, auto& res) { create_dataset(req, res); }));
        server.Get(R"(/datasets/([^/]+))", wrap([this](const auto& req, auto& res) { get_dataset(req, res); }));
        server.Post(R"(/datasets/([^/]+)/stories)", wrap([this](const auto& req, auto& res) { generate(req, res); }));
        server.Delete(R"(/jobs/([^/]+))", wrap([this](const auto& req, auto& res) { cancel_job(req, res); }));
        server.Get(R"(/stories/([^/]+))", wrap([this](const auto& req, auto& res) { get_story(req, res); }));
        server.Patch(R"(/stories/([^/]+))", wrap([this](const auto& req, auto& res) { patch_story(req, res); }));
        server.Post(R"(/stories/([^/]+)/facts)", wrap([this](const auto& req, auto& res) { add(req, res); }));
        server.Delete(R"(/stories/([^/]+)/facts/([^/]+))", wrap([this](const auto& req, auto& res) { remove(req, res); }));
        server.Post(R"(/stories/([^/]+)/order)", wrap([this](const auto& req, auto& res) { reorder(req, res); }));
        server.Get(R"(/stories/([^/]+)/render)", wrap([this](const auto& req, auto& res) { render(req, res); }));
        server.Post(R"(/stories/([^/]+)/share)", wrap([this](const auto& req, auto& res) { share(req, res); }));
        server.Get(R"(/shared/([^/]+))", wrap([this](const auto& req, auto& res) { shared(req, res); }));
    }

    // -- storage -------------------------------------------------------------

    std::shared_ptr<const DataTable> table(const std::string& dataset_id) {
        if (!detail::safe_id(dataset_id)) throw HttpError{404, "not_found", "unknown dataset " + dataset_id};
        {
            std::lock_guard lock(mutex_);
            if (auto it = tables_.find(dataset_id); it != tables_.end()) return it->second;
        }
        const fs::path csv = config_.data_dir / "datasets" / dataset_id / "data.csv";
        if (!fs::exists(csv)) throw HttpError{404, "not_found", "unknown dataset " + dataset_id};
        auto t = std::make_shared<const DataTable>(load_csv(detail::read_file(csv)));
        std::lock_guard lock(mutex_);
        return tables_.emplace(dataset_id, std::move(t)).first->second;
    }

    StoryDocument load_story(const std::string& id) {
        if (!detail::safe_id(id)) throw HttpError{404, "not_found", "unknown story " + id};
        const fs::path p = story_path(id);
        if (!fs::exists(p)) throw HttpError{404, "not_found", "unknown story " + id};
        return document_from_json(json::parse(detail::read_file(p)));
    }

    void save_story(const StoryDocument& doc) { detail::write_file(story_path(doc.id), to_json(doc).dump(2) + "\n"); }

private:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static void send_json(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, const HttpError& e) {
        send_json(res, e.status, {{"code", e.code}, {"message", e.message}, {"details", e.details}});
    }

    /// Maps library exceptions onto status codes.
    static Handler wrap(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const HttpError& e) {
                send_error(res, e);
            } catch (const CsvError& e) {
                send_error(res, {422, "csv_error", e.what(), json::array({{{"row", e.row()}, {"column", e.column()}}})});
            } catch (const ValidationError& e) {
                send_error(res, {422, "invalid_fact", e.what(), e.violations()});
            } catch (const ParseError& e) {
                send_error(res, {422, "invalid_record", e.what()});
            } catch (const SchemaError& e) {
                send_error(res, {422, "schema_error", e.what()});
            } catch (const EmptyTable& e) {
                send_error(res, {422, "empty_table", e.what()});
            } catch (const GenerationError& e) {
                send_error(res, {409, "generation_failed", e.what()});
            } catch (const SpecError& e) {
                send_error(res, {400, "bad_request", e.what()});
            } catch (const std::out_of_range& e) {
                send_error(res, {404, "not_found", e.what()});
            } catch (const Error& e) {
                send_error(res, {422, "domain_error", e.what()});
            } catch (const std::exception& e) {
                send_error(res, {500, "internal", e.what()});
            }
        };
    }

    fs::path story_path(const std::string& id) const { return config_.data_dir / "stories" / (id + ".json"); }

    std::shared_ptr<std::mutex> story_mutex(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto& m = story_locks_[id];
        if (!m) m = std::make_shared<std::mutex>();
        return m;
    }

    // -- datasets ------------------------------------------------------------

    void create_dataset(const httplib::Request& req, httplib::Response& res) {
        std::string bytes = req.body;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("file")) throw HttpError{400, "bad_request", "multipart upload needs a \"file\" part"};
            bytes = req.get_file_value("file").content;
        }
        if (bytes.size() > config_.max_upload_bytes)
            throw HttpError{413, "payload_too_large", "upload exceeds the size limit"};
        auto t = std::make_shared<const DataTable>(load_csv(bytes));
        const std::string id = detail::random_id();
        const fs::path dir = config_.data_dir / "datasets" / id;
        json meta = {{"id", id},
                     {"row_count", t->row_count()},
                     {"schema", detail::schema_summary(*t)},
                     {"created_at", detail::utc_now()}};
        detail::write_file(dir / "data.csv", bytes);
        detail::write_file(dir / "meta.json", meta.dump(2) + "\n");
        {
            std::lock_guard lock(mutex_);
            tables_[id] = std::move(t);
        }
        send_json(res, 201, meta);
    }

    void get_dataset(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!detail::safe_id(id)) throw HttpError{404, "not_found", "unknown dataset " + id};
        const fs::path p = config_.data_dir / "datasets" / id / "meta.json";
        if (!fs::exists(p)) throw HttpError{404, "not_found", "unknown dataset " + id};
        send_json(res, 200, json::parse(detail::read_file(p)));
    }

    // -- generation ----------------------------------------------------------

    void generate(const httplib::Request& req, httplib::Response& res) {
        const std::string dataset_id = req.matches[1];
        const auto t = table(dataset_id);
        const json body = detail::parse_body(req);
        const GenerationParams params = detail::generation_params(body);

        const std::string job_id = body.value("job_id", detail::random_id());
        if (!detail::safe_id(job_id)) throw HttpError{400, "bad_request", "job_id must be alphanumeric"};
        auto flag = std::make_shared<std::atomic<bool>>(false);
        {
            std::lock_guard lock(mutex_);
            if (jobs_.count(job_id)) throw HttpError{409, "job_exists", "job " + job_id + " is already running"};
            jobs_[job_id] = flag;
        }
        struct Forget {
            Service* s;
            std::string id;
            ~Forget() {
                std::lock_guard lock(s->mutex_);
                s->jobs_.erase(id);
            }
        } forget{this, job_id};

        StoryDocument doc = generate_document(*t, params, flag.get(), detail::random_id(), dataset_id);
        if (flag->load()) throw HttpError{409, "cancelled", "generation was cancelled"};
        save_story(doc);
        json out = to_json(doc);
        out["job_id"] = job_id;
        out["diagnostics"] = {{"D", doc.story.criteria.diversity},
                              {"L", doc.story.criteria.logicality},
                              {"C", doc.story.criteria.integrity},
                              {"H", doc.story.criteria.entropy}};
        send_json(res, 201, out);
    }

    void cancel_job(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw HttpError{404, "not_found", "no running job " + id};
        it->second->store(true);
        send_json(res, 202, {{"job_id", id}, {"cancelled", true}});
    }

    // -- stories -------------------------------------------------------------

    void get_story(const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, to_json(load_story(req.matches[1])));
    }

    /// Loads, checks the revision, applies `edit`, persists and replies.
    template <typename Edit>
    void mutate(const httplib::Request& req, httplib::Response& res, Edit edit) {
        const std::string id = req.matches[1];
        const json body = detail::parse_body(req);
        const auto lock_ptr = story_mutex(id);
        std::lock_guard lock(*lock_ptr);
        StoryDocument doc = load_story(id);
        if (body.contains("revision")) {
            if (!body["revision"].is_number_unsigned() || body["revision"].get<std::uint64_t>() != doc.revision)
                throw HttpError{409, "stale_revision",
                                "story is at revision " + std::to_string(doc.revision),
                                json::array({{{"current_revision", doc.revision}}})};
        }
        const auto t = table(doc.dataset_id);
        edit(doc, *t, body);
        save_story(doc);
        send_json(res, 200, to_json(doc));
    }

    static std::optional<ChartType> chart_field(const json& body) {
        if (!body.contains("chart") || body["chart"].is_null()) return std::nullopt;
        const auto c = parse_chart_type(body["chart"].get<std::string>());
        if (!c) throw HttpError{400, "bad_request", "unknown chart type " + body["chart"].get<std::string>()};
        return c;
    }

    static DataFact fact_field(const json& body, const DataTable& t) {
        if (!body.contains("fact")) throw HttpError{400, "bad_request", "body needs a \"fact\" record"};
        return from_fact_record(body["fact"], t.schema());
    }

    void patch_story(const httplib::Request& req, httplib::Response& res) {
        mutate(req, res, [](StoryDocument& doc, const DataTable& t, const json& body) {
            if (!body.contains("index") || !body["index"].is_number_unsigned())
                throw HttpError{400, "bad_request", "body needs a non-negative \"index\""};
            const auto index = body["index"].get<std::size_t>();
            if (index >= doc.story.facts.size())
                throw HttpError{404, "not_found", "no fact at index " + std::to_string(index)};
            const auto chart = chart_field(body);
            const DataFact f = body.contains("fact") ? fact_field(body, t) : doc.story.facts[index];
            edit_fact(doc, index, f, t, chart);
        });
    }

    void add(const httplib::Request& req, httplib::Response& res) {
        mutate(req, res, [](StoryDocument& doc, const DataTable& t, const json& body) {
            std::optional<std::size_t> position;
            if (body.contains("position") && !body["position"].is_null()) {
                if (!body["position"].is_number_unsigned() || body["position"].get<std::size_t>() > doc.story.facts.size())
                    throw HttpError{404, "not_found", "position out of range"};
                position = body["position"].get<std::size_t>();
            }
            add_fact(doc, fact_field(body, t), t, position);
        });
    }

    void remove(const httplib::Request& req, httplib::Response& res) {
        const std::size_t index = detail::parse_index(req.matches[2]);
        mutate(req, res, [index](StoryDocument& doc, const DataTable& t, const json&) { remove_fact(doc, index, t); });
    }

    void reorder(const httplib::Request& req, httplib::Response& res) {
        mutate(req, res, [](StoryDocument& doc, const DataTable& t, const json& body) {
            if (!body.contains("order") || !body["order"].is_array())
                throw HttpError{400, "bad_request", "body needs an \"order\" array"};
            std::vector<std::size_t> order;
            for (const auto& v : body["order"]) {
                if (!v.is_number_unsigned()) throw HttpError{404, "not_found", "order entries must be fact indexes"};
                order.push_back(v.get<std::size_t>());
            }
            reorder_facts(doc, order, t);
        });
    }

    // -- rendering and sharing -----------------------------------------------

    static RenderMode mode_param(const httplib::Request& req, const json& body = json::object()) {
        std::string m = req.has_param("mode") ? req.get_param_value("mode") : body.value("mode", std::string("storyline"));
        const auto mode = parse_render_mode(m);
        if (!mode) throw HttpError{400, "bad_request", "unknown render mode " + m};
        return *mode;
    }

    static const char* content_type(RenderMode m) {
        return m == RenderMode::swiper ? "text/html; charset=utf-8" : "image/svg+xml";
    }

    void render(const httplib::Request& req, httplib::Response& res) {
        const RenderMode mode = mode_param(req);
        const StoryDocument doc = load_story(req.matches[1]);
        const auto t = table(doc.dataset_id);
        res.status = 200;
        res.set_content(render_document(doc, *t, mode), content_type(mode));
    }

    /// Token derived from (story, revision, mode), so sharing is idempotent
    /// and the snapshot never changes after later edits.
    void share(const httplib::Request& req, httplib::Response& res) {
        const json body = detail::parse_body(req);
        const RenderMode mode = mode_param(req, body);
        const std::string id = req.matches[1];
        const auto lock_ptr = story_mutex(id);
        std::lock_guard lock(*lock_ptr);
        const StoryDocument doc = load_story(id);
        char token[17];
        std::snprintf(token, sizeof token, "%016llx",
                      static_cast<unsigned long long>(
                          fnv1a(doc.id + ":" + std::to_string(doc.revision) + ":" + std::string(to_string(mode)))));
        const fs::path meta = config_.data_dir / "shares" / (std::string(token) + ".json");
        if (!fs::exists(meta)) {
            const auto t = table(doc.dataset_id);
            detail::write_file(config_.data_dir / "shares" / (std::string(token) + ".body"),
                               render_document(doc, *t, mode));
            detail::write_file(meta, json({{"story_id", doc.id},
                                           {"revision", doc.revision},
                                           {"mode", to_string(mode)},
                                           {"content_type", content_type(mode)}})
                                             .dump(2) +
                                         "\n");
        }
        const std::string url = config_.public_base + "/shared/" + token;
        send_json(res, 200,
                  {{"token", token},
                   {"url", url},
                   {"revision", doc.revision},
                   {"mode", to_string(mode)},
                   {"embed", "<iframe src=\"" + url + "\" width=\"100%\" height=\"640\" frameborder=\"0\"></iframe>"}});
    }

    void shared(const httplib::Request& req, httplib::Response& res) {
        const std::string token = req.matches[1];
        if (!detail::safe_id(token)) throw HttpError{404, "not_found", "unknown share link"};
        const fs::path meta = config_.data_dir / "shares" / (token + ".json");
        if (!fs::exists(meta)) throw HttpError{404, "not_found", "unknown share link"};
        const json m = json::parse(detail::read_file(meta));
        res.status = 200;
        res.set_content(detail::read_file(config_.data_dir / "shares" / (token + ".body")),
                        m.at("content_type").get<std::string>());
    }

    ServiceConfig config_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const DataTable>> tables_;
    std::map<std::string, std::shared_ptr<std::mutex>> story_locks_;
    std::map<std::string, std::shared_ptr<std::atomic<bool>>> jobs_;
};

/// Blocks serving on host:port until the server is stopped.
inline bool serve(const std::string& host, int port, const fs::path& data_dir) {
    ServiceConfig config;
    config.data_dir = data_dir;
    Service service(std::move(config));
    httplib::Server server;
    service.install(server);
    return server.listen(host, port);
}

}  // namespace factweaver::service
