#include "psim/psim.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "psim/commands.hpp"
#include "psim/logging.hpp"
#include "psim/stats.hpp"
#include "psim/thought_parser.hpp"

struct psim_context {
  psim::Json config_json;
  psim::RunConfig config;
};

namespace {

using psim::Error;
using psim::ErrorCode;
using psim::Json;

thread_local std::string g_last_error;

psim_status fail(psim_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
psim_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail(static_cast<psim_status>(e.code()), e.what());
  } catch (const Json::exception& e) {
    return fail(PSIM_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PSIM_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_json(char** out, const Json& j) {
  if (out) *out = dup_string(j.dump());
}

Json parse_arg(const char* text, const char* what) {
  if (!text) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is null");
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

psim::ConfigOverrides overrides_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "overrides must be a JSON object");
  psim::ConfigOverrides o;
  if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("strategy")) o.strategy = j.at("strategy").get<bool>();
  if (j.contains("pipeline")) o.pipeline = j.at("pipeline").get<std::string>();
  if (j.contains("parallel")) o.parallel = j.at("parallel").get<int>();
  if (j.contains("output_dir")) o.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("personas_path")) o.personas_path = j.at("personas_path").get<std::string>();
  if (j.contains("endpoint")) o.endpoint = j.at("endpoint").get<std::string>();
  o.strict_replay = j.value("strict_replay", false);
  return o;
}

psim::AnalysisOptions analysis_options_from_json(const Json& j) {
  psim::AnalysisOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "analysis options must be a JSON object");
  if (auto it = j.find("group_by"); it != j.end() && !it->is_null()) {
    o.group_by = psim::parse_token<psim::FixedAttribute>(it->get<std::string>(), "group_by");
  }
  o.metrics = j.get<psim::MetricsOptions>();
  if (auto it = j.find("chart_scale"); it != j.end()) {
    auto token = it->get<std::string>();
    auto scale = psim::chart_scale_from_token(token);
    if (!scale) throw Error(ErrorCode::kInvalidArgument, "unknown chart_scale '" + token + "'");
    o.chart_scale = *scale;
  }
  if (auto it = j.find("t_variant"); it != j.end()) {
    auto token = it->get<std::string>();
    if (token == "welch") o.t_variant = psim::TVariant::Welch;
    else if (token == "pooled") o.t_variant = psim::TVariant::Pooled;
    else throw Error(ErrorCode::kInvalidArgument, "unknown t_variant '" + token + "'");
  }
  return o;
}

Json read_file_json(const char* path) {
  if (!path) throw Error(ErrorCode::kInvalidArgument, "config path is null");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, std::string("cannot open config ") + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string(path) + ": " + e.what());
  }
}

psim_status make_context(Json j, psim_context** out) {
  if (!out) throw Error(ErrorCode::kInvalidArgument, "out is null");
  *out = nullptr;
  auto cfg = j.get<psim::RunConfig>();
  *out = new psim_context{std::move(j), std::move(cfg)};
  return PSIM_OK;
}

psim_status report_stat(const psim::StatResult& r, double* stat, double* p) {
  if (stat) *stat = r.statistic;
  if (p) *p = r.p_value.value_or(std::numeric_limits<double>::quiet_NaN());
  if (!r.p_value) return fail(PSIM_ERR_DEGENERATE, r.note);
  return PSIM_OK;
}

}  // namespace

extern "C" {

const char* psim_version(void) { return "0.1.0"; }

const char* psim_status_name(psim_status status) {
  if (status == PSIM_OK) return "ok";
  return psim::error_code_name(static_cast<ErrorCode>(status));
}

const char* psim_last_error(void) { return g_last_error.c_str(); }

void psim_string_free(char* s) { std::free(s); }

void psim_set_verbosity(int level) { psim::set_verbosity(level); }

psim_status psim_context_create(const char* config_json, psim_context** out) {
  return guarded([&] { return make_context(parse_arg(config_json, "config"), out); });
}

psim_status psim_context_create_from_file(const char* path, psim_context** out) {
  return guarded([&] { return make_context(read_file_json(path), out); });
}

void psim_context_destroy(psim_context* ctx) { delete ctx; }

psim_status psim_context_apply_overrides(psim_context* ctx, const char* overrides_json) {
  return guarded([&] {
    if (!ctx) throw Error(ErrorCode::kInvalidArgument, "context is null");
    auto overrides = overrides_from_json(parse_arg(overrides_json, "overrides"));
    Json patched = psim::apply_overrides(ctx->config_json, overrides);
    auto cfg = patched.get<psim::RunConfig>();
    ctx->config_json = std::move(patched);
    ctx->config = std::move(cfg);
    return PSIM_OK;
  });
}

psim_status psim_context_config(const psim_context* ctx, char** out_json) {
  return guarded([&] {
    if (!ctx || !out_json) throw Error(ErrorCode::kInvalidArgument, "null argument");
    put_json(out_json, Json(ctx->config));
    return PSIM_OK;
  });
}

psim_status psim_generate_personas(psim_context* ctx, char** out_summary_json) {
  return guarded([&] {
    if (!ctx) throw Error(ErrorCode::kInvalidArgument, "context is null");
    auto outcome = psim::run_personas(ctx->config);
    put_json(out_summary_json, Json{{"path", outcome.path.string()},
                                    {"count", outcome.personas.size()},
                                    {"per_condition", outcome.per_condition}});
    return PSIM_OK;
  });
}

psim_status psim_simulate(psim_context* ctx, char** out_summary_json) {
  return guarded([&] {
    if (!ctx) throw Error(ErrorCode::kInvalidArgument, "context is null");
    auto outcome = psim::run_simulate(ctx->config);
    put_json(out_summary_json, Json{{"dir", outcome.dir.string()},
                                    {"requested", outcome.requested},
                                    {"transcripts", outcome.transcripts},
                                    {"aborted", outcome.aborted}});
    if (outcome.abort_fraction() > ctx->config.abort_threshold) {
      std::ostringstream msg;
      msg << outcome.aborted << " of " << outcome.requested << " conversations aborted (threshold "
          << ctx->config.abort_threshold << ")";
      return fail(PSIM_ERR_ABORT_THRESHOLD, msg.str());
    }
    return PSIM_OK;
  });
}

psim_status psim_analyze(const char* const* run_dirs, size_t n_dirs, const char* options_json,
                         const char* out_dir, char** out_summary_json) {
  return guarded([&] {
    if (!run_dirs || n_dirs == 0) throw Error(ErrorCode::kInvalidArgument, "no run directories");
    std::vector<std::filesystem::path> dirs;
    for (size_t i = 0; i < n_dirs; ++i) {
      if (!run_dirs[i]) throw Error(ErrorCode::kInvalidArgument, "run directory is null");
      dirs.emplace_back(run_dirs[i]);
    }
    Json opts = options_json ? parse_arg(options_json, "options") : Json(nullptr);
    auto outcome = psim::run_analyze(dirs, analysis_options_from_json(opts),
                                     out_dir ? std::filesystem::path(out_dir) : std::filesystem::path());
    Json summary{{"runs", Json::array()}, {"written", Json::array()}};
    for (const auto& r : outcome.results) {
      Json reports = Json::array();
      for (const auto& m : r.reports) reports.push_back(m);
      summary["runs"].push_back(Json{{"attribute", psim::to_token(r.attribute)},
                                     {"metrics", std::move(reports)},
                                     {"stats", r.stats}});
    }
    for (const auto& p : outcome.written) summary["written"].push_back(p.string());
    if (outcome.comparison_markdown) summary["comparison"] = *outcome.comparison_markdown;
    put_json(out_summary_json, summary);
    return PSIM_OK;
  });
}

psim_status psim_parse_thought(const char* raw, const char* catalog_json, char** out_json) {
  return guarded([&] {
    if (!raw || !out_json) throw Error(ErrorCode::kInvalidArgument, "null argument");
    auto catalog = catalog_json ? parse_arg(catalog_json, "catalog").get<psim::IntentCatalog>()
                                : psim::IntentCatalog::defaults();
    put_json(out_json, Json(psim::parse_thought(raw, catalog)));
    return PSIM_OK;
  });
}

psim_status psim_format_thought(const char* thought_json, char** out_text) {
  return guarded([&] {
    if (!out_text) throw Error(ErrorCode::kInvalidArgument, "out is null");
    auto thought = parse_arg(thought_json, "thought").get<psim::Thought>();
    *out_text = dup_string(psim::format_thought(thought));
    return PSIM_OK;
  });
}

psim_status psim_reg_incomplete_beta(double a, double b, double x, double* out) {
  return guarded([&] {
    if (!out) throw Error(ErrorCode::kInvalidArgument, "out is null");
    *out = psim::reg_incomplete_beta(a, b, x);
    return PSIM_OK;
  });
}

psim_status psim_one_way_anova(const double* values, const size_t* group_sizes, size_t n_groups,
                               double* out_f, double* out_p, double* out_df1, double* out_df2) {
  return guarded([&] {
    if (!values || !group_sizes) throw Error(ErrorCode::kInvalidArgument, "null argument");
    std::vector<std::vector<double>> groups;
    const double* cursor = values;
    for (size_t g = 0; g < n_groups; ++g) {
      groups.emplace_back(cursor, cursor + group_sizes[g]);
      cursor += group_sizes[g];
    }
    auto r = psim::one_way_anova(groups);
    if (out_df1) *out_df1 = r.df[0];
    if (out_df2) *out_df2 = r.df[1];
    return report_stat(r, out_f, out_p);
  });
}

psim_status psim_t_test(const double* a, size_t na, const double* b, size_t nb, int welch, double* out_t,
                        double* out_p, double* out_df) {
  return guarded([&] {
    if (!a || !b) throw Error(ErrorCode::kInvalidArgument, "null argument");
    auto r = psim::two_sample_t(std::span<const double>(a, na), std::span<const double>(b, nb),
                                welch ? psim::TVariant::Welch : psim::TVariant::Pooled);
    if (out_df) *out_df = r.df[0];
    return report_stat(r, out_t, out_p);
  });
}

}  // extern "C"
