#include "imbsam/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace imbsam {

namespace {

using nlohmann::json;

json from_maybe_nan(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double to_maybe_nan(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

Restriction restriction_from(const std::string& name) {
  if (name == "all") return Restriction::kAll;
  if (name == "head") return Restriction::kHead;
  if (name == "tail") return Restriction::kTail;
  throw std::invalid_argument("unknown restriction: " + name);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

std::string result_to_json(const RunResult& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["master_seed"] = r.master_seed;
  j["optimizer"] = r.optimizer;
  j["num_classes"] = r.num_classes;
  j["train_class_counts"] = r.train_class_counts;
  j["eta"] = r.eta;
  j["many_min"] = r.many_min;
  j["few_max"] = r.few_max;
  j["epoch_loss_all"] = r.epoch_loss_all;
  j["epoch_loss_head"] = r.epoch_loss_head;
  j["epoch_loss_tail"] = r.epoch_loss_tail;
  json ratios = json::array();
  for (double v : r.epoch_perturbation_ratio) ratios.push_back(from_maybe_nan(v));
  j["epoch_perturbation_ratio"] = ratios;
  j["per_class_accuracy"] = r.accuracy.per_class;
  j["acc_all"] = r.accuracy.all;
  j["acc_many"] = from_maybe_nan(r.accuracy.many);
  j["acc_medium"] = from_maybe_nan(r.accuracy.medium);
  j["acc_few"] = from_maybe_nan(r.accuracy.few);
  j["aucroc"] = from_maybe_nan(r.aucroc);
  j["aucpr_tail"] = from_maybe_nan(r.aucpr_tail);
  j["aucpr_head"] = from_maybe_nan(r.aucpr_head);
  json sharp = json::array();
  for (const auto& s : r.sharpness) {
    sharp.push_back({{"restriction", restriction_name(s.restriction)},
                     {"lambda_max", s.lambda_max},
                     {"trace", s.trace},
                     {"trace_std_error", s.trace_std_error},
                     {"probes_used", s.probes_used},
                     {"power_iters", s.power_iters},
                     {"converged", s.converged}});
  }
  j["sharpness"] = sharp;
  j["wall_seconds"] = r.wall_seconds;
  j["test_set_hash"] = r.test_set_hash;
  std::vector<double> params(r.final_params.data(), r.final_params.data() + r.final_params.size());
  j["final_params"] = params;
  return j.dump(2);
}

RunResult result_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunResult r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  r.optimizer = j.at("optimizer").get<std::string>();
  r.num_classes = j.at("num_classes").get<int>();
  r.train_class_counts = j.at("train_class_counts").get<std::vector<Index>>();
  r.eta = j.at("eta").get<long long>();
  r.many_min = j.at("many_min").get<long long>();
  r.few_max = j.at("few_max").get<long long>();
  r.epoch_loss_all = j.at("epoch_loss_all").get<std::vector<double>>();
  r.epoch_loss_head = j.at("epoch_loss_head").get<std::vector<double>>();
  r.epoch_loss_tail = j.at("epoch_loss_tail").get<std::vector<double>>();
  for (const auto& v : j.at("epoch_perturbation_ratio")) {
    r.epoch_perturbation_ratio.push_back(to_maybe_nan(v));
  }
  r.accuracy.per_class = j.at("per_class_accuracy").get<std::vector<double>>();
  r.accuracy.all = j.at("acc_all").get<double>();
  r.accuracy.many = to_maybe_nan(j.at("acc_many"));
  r.accuracy.medium = to_maybe_nan(j.at("acc_medium"));
  r.accuracy.few = to_maybe_nan(j.at("acc_few"));
  r.accuracy.splits = evaluation_splits(r.train_class_counts, r.many_min, r.few_max);
  r.aucroc = to_maybe_nan(j.at("aucroc"));
  r.aucpr_tail = to_maybe_nan(j.at("aucpr_tail"));
  r.aucpr_head = to_maybe_nan(j.at("aucpr_head"));
  for (const auto& s : j.at("sharpness")) {
    SharpnessReport rep;
    rep.restriction = restriction_from(s.at("restriction").get<std::string>());
    rep.lambda_max = s.at("lambda_max").get<double>();
    rep.trace = s.at("trace").get<double>();
    rep.trace_std_error = s.at("trace_std_error").get<double>();
    rep.probes_used = s.at("probes_used").get<int>();
    rep.power_iters = s.at("power_iters").get<int>();
    rep.converged = s.at("converged").get<bool>();
    r.sharpness.push_back(rep);
  }
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.test_set_hash = j.at("test_set_hash").get<std::uint64_t>();
  const auto params = j.at("final_params").get<std::vector<double>>();
  r.final_params = Eigen::Map<const Vector>(params.data(), static_cast<Index>(params.size()));
  return r;
}

void write_result_json(const RunResult& result, const std::string& path) {
  auto out = open_out(path);
  out << result_to_json(result) << "\n";
}

RunResult read_result_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open result file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return result_from_json(ss.str());
}

void write_checkpoint(const ParamLayout& layout, const Vector& values, const std::string& path) {
  if (values.size() != layout.total()) {
    throw std::invalid_argument("write_checkpoint: value length does not match layout");
  }
  auto out = open_out(path);
  out << "imbsam-checkpoint 1\n";
  out << "layers " << layout.layer_count() << "\n";
  for (Index l = 0; l < layout.layer_count(); ++l) {
    out << "dims " << layout.dims(l).in << " " << layout.dims(l).out << "\n";
  }
  out << "values " << values.size() << "\n";
  for (Index i = 0; i < values.size(); ++i) out << fmt17(values[i]) << "\n";
}

ParamVector read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path);
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "imbsam-checkpoint" || version != 1) {
    throw std::runtime_error("read_checkpoint: bad header in " + path);
  }
  Index layers = 0;
  in >> word >> layers;
  if (word != "layers" || layers < 1) throw std::runtime_error("read_checkpoint: bad layer count");
  std::vector<LayerDims> dims(static_cast<std::size_t>(layers));
  for (auto& d : dims) {
    in >> word >> d.in >> d.out;
    if (word != "dims") throw std::runtime_error("read_checkpoint: bad dims line");
  }
  Index count = 0;
  in >> word >> count;
  if (word != "values") throw std::runtime_error("read_checkpoint: bad values header");
  ParamVector p{ParamLayout(std::move(dims)), Vector::Zero(count)};
  if (p.layout.total() != count) {
    throw std::runtime_error("read_checkpoint: value count does not match layout");
  }
  for (Index i = 0; i < count; ++i) {
    if (!(in >> p.values[i])) throw std::runtime_error("read_checkpoint: truncated values");
  }
  return p;
}

void write_metrics_csv(std::span<const RunResult> results, const std::string& path) {
  auto out = open_out(path);
  out << "config_hash,optimizer,seed,epoch,loss_all,loss_head,loss_tail\n";
  for (const auto& r : results) {
    for (std::size_t e = 0; e < r.epoch_loss_all.size(); ++e) {
      out << r.config_hash << "," << r.optimizer << "," << r.master_seed << "," << e << ","
          << fmt17(r.epoch_loss_all[e]) << "," << fmt17(r.epoch_loss_head[e]) << ","
          << fmt17(r.epoch_loss_tail[e]) << "\n";
    }
  }
}

void write_sharpness_csv(std::span<const SharpnessReport> reports, const std::string& config_hash,
                         const std::string& optimizer, std::uint64_t seed,
                         const std::string& path) {
  auto out = open_out(path);
  out << "config_hash,optimizer,seed,restriction,lambda_max,trace,trace_std_error,probes,"
         "power_iters,converged\n";
  for (const auto& s : reports) {
    out << config_hash << "," << optimizer << "," << seed << ","
        << restriction_name(s.restriction) << "," << fmt17(s.lambda_max) << "," << fmt17(s.trace)
        << "," << fmt17(s.trace_std_error) << "," << s.probes_used << "," << s.power_iters << ","
        << (s.converged ? "true" : "false") << "\n";
  }
}

void write_landscape_csv(const LandscapeSlice& slice, const std::string& run_id,
                         const std::string& restriction, const std::string& path) {
  auto out = open_out(path);
  if (slice.directions.size() == 1) {
    out << "run_id,restriction,offset,loss\n";
    for (std::size_t g = 0; g < slice.offsets.size(); ++g) {
      out << run_id << "," << restriction << "," << fmt17(slice.offsets[g]) << ","
          << fmt17(slice.losses(0, static_cast<Index>(g))) << "\n";
    }
  } else {
    out << "run_id,restriction,offset_1,offset_2,loss\n";
    for (std::size_t g1 = 0; g1 < slice.offsets.size(); ++g1) {
      for (std::size_t g2 = 0; g2 < slice.offsets.size(); ++g2) {
        out << run_id << "," << restriction << "," << fmt17(slice.offsets[g1]) << ","
            << fmt17(slice.offsets[g2]) << ","
            << fmt17(slice.losses(static_cast<Index>(g1), static_cast<Index>(g2))) << "\n";
      }
    }
  }
}

void write_grid_csv(std::span<const GridCell> cells, const std::string& path) {
  auto out = open_out(path);
  out << "config_hash,optimizer,rho,eta,seed,status,error,acc_all,acc_many,acc_medium,acc_few,"
         "aucroc,aucpr_tail,aucpr_head,wall_seconds\n";
  for (const auto& c : cells) {
    if (!c.ok) {
      out << "," << "," << fmt17(c.rho) << "," << c.eta << "," << c.seed << ",failed,\""
          << c.error << "\",,,,,,,,\n";
      continue;
    }
    const auto& r = c.result;
    out << r.config_hash << "," << r.optimizer << "," << fmt17(c.rho) << "," << c.eta << ","
        << c.seed << ",ok,," << fmt17(r.accuracy.all) << "," << fmt17(r.accuracy.many) << ","
        << fmt17(r.accuracy.medium) << "," << fmt17(r.accuracy.few) << "," << fmt17(r.aucroc)
        << "," << fmt17(r.aucpr_tail) << "," << fmt17(r.aucpr_head) << ","
        << fmt17(r.wall_seconds) << "\n";
  }
}

void write_gain_csv(const GainReport& report, const std::string& run_a, const std::string& run_b,
                    const std::string& path) {
  auto out = open_out(path);
  out << "run_a,run_b,scope,delta\n";
  for (std::size_t k = 0; k < report.delta_per_class.size(); ++k) {
    out << run_a << "," << run_b << ",class_" << (k + 1) << "," << fmt17(report.delta_per_class[k])
        << "\n";
  }
  out << run_a << "," << run_b << ",all," << fmt17(report.delta_all) << "\n";
  out << run_a << "," << run_b << ",many," << fmt17(report.delta_many) << "\n";
  out << run_a << "," << run_b << ",medium," << fmt17(report.delta_medium) << "\n";
  out << run_a << "," << run_b << ",few," << fmt17(report.delta_few) << "\n";
}

}  // namespace imbsam
