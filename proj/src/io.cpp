#include "stir/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stir {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

double parse_double(const std::string& token, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad number '" + token + "' in " + where);
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

void write_vector_line(std::ofstream& f, const std::string& key,
                       const Vector& v) {
  f << key;
  for (Index i = 0; i < v.size(); ++i) f << ' ' << format_double(v[i]);
  f << '\n';
}

Vector parse_vector(const std::vector<std::string>& tokens, size_t from,
                    const std::string& where) {
  Vector v(static_cast<Index>(tokens.size() - from));
  for (size_t i = from; i < tokens.size(); ++i) {
    v[static_cast<Index>(i - from)] = parse_double(tokens[i], where);
  }
  return v;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::string& path) {
  validate(data);
  auto f = open_out(path);
  for (Index j = 0; j < data.d(); ++j) f << "x_" << (j + 1) << ',';
  f << "y\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) {
      f << format_double(data.covariates(j, i)) << ',';
    }
    f << format_double(data.responses[i]) << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty dataset file: " + path);
  const auto header = split(line, ',');
  if (header.size() < 2 || header.back() != "y") {
    throw IoError("malformed dataset header in " + path);
  }
  const Index d = static_cast<Index>(header.size()) - 1;
  std::vector<double> xs;
  std::vector<double> ys;
  Index n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Index>(cells.size()) != d + 1) {
      throw IoError("row width mismatch in " + path);
    }
    for (Index j = 0; j < d; ++j) {
      xs.push_back(parse_double(cells[static_cast<size_t>(j)], path));
    }
    ys.push_back(parse_double(cells.back(), path));
    ++n;
  }
  Matrix X(d, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) X(j, i) = xs[static_cast<size_t>(i * d + j)];
  }
  Vector y = Eigen::Map<Vector>(ys.data(), n);
  return make_dataset(std::move(X), std::move(y));
}

void write_ground_truth(const GroundTruth& truth, Index n,
                        const std::string& path) {
  auto f = open_out(path);
  f << "seed " << truth.seed << '\n';
  f << "n " << n << '\n';
  f << "corruption_fraction " << format_double(truth.corruption_fraction)
    << '\n';
  write_vector_line(f, "gold_model", truth.gold_model);
  if (truth.fake_model) write_vector_line(f, "fake_model", *truth.fake_model);
  f << "corruption";
  for (Index i : truth.corruption_support) {
    f << ' ' << i << ':' << format_double(truth.corruption_values[i]);
  }
  f << '\n';
  if (truth.dense_noise.size() > 0 && truth.dense_noise.any()) {
    write_vector_line(f, "dense_noise", truth.dense_noise);
  }
}

GroundTruth read_ground_truth(const std::string& path) {
  auto f = open_in(path);
  GroundTruth truth;
  Index n = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto tokens = split(line, ' ');
    const std::string& key = tokens.front();
    if (key == "seed") {
      truth.seed = static_cast<std::uint64_t>(std::stoull(tokens.at(1)));
    } else if (key == "n") {
      n = static_cast<Index>(std::stoll(tokens.at(1)));
    } else if (key == "corruption_fraction") {
      truth.corruption_fraction = parse_double(tokens.at(1), path);
    } else if (key == "gold_model") {
      truth.gold_model = parse_vector(tokens, 1, path);
    } else if (key == "fake_model") {
      truth.fake_model = parse_vector(tokens, 1, path);
    } else if (key == "dense_noise") {
      truth.dense_noise = parse_vector(tokens, 1, path);
    } else if (key == "corruption") {
      if (n == 0) throw IoError("corruption line before n in " + path);
      truth.corruption_values = Vector::Zero(n);
      for (size_t i = 1; i < tokens.size(); ++i) {
        const auto sep = tokens[i].find(':');
        if (sep == std::string::npos) {
          throw IoError("bad corruption entry in " + path);
        }
        const Index idx = static_cast<Index>(
            std::stoll(tokens[i].substr(0, sep)));
        if (idx < 0 || idx >= n) throw IoError("corruption index out of range");
        truth.corruption_support.push_back(idx);
        truth.corruption_values[idx] =
            parse_double(tokens[i].substr(sep + 1), path);
      }
    } else {
      throw IoError("unknown sidecar key '" + key + "' in " + path);
    }
  }
  if (truth.gold_model.size() == 0) {
    throw IoError("sidecar missing gold_model: " + path);
  }
  if (n == 0) throw IoError("sidecar missing n: " + path);
  if (truth.corruption_values.size() == 0) truth.corruption_values = Vector::Zero(n);
  if (truth.dense_noise.size() == 0) truth.dense_noise = Vector::Zero(n);
  return truth;
}

void write_trace_jsonl(const SolverTrace& trace, const std::string& path) {
  auto f = open_out(path);
  std::int64_t elapsed = 0;
  for (size_t s = 0; s < trace.stages.size(); ++s) {
    const StageRecord& stage = trace.stages[s];
    const int iters = stage.inner_iterations();
    for (int t = 0; t < iters; ++t) {
      // Stage wall time is attributed evenly across its iterates.
      const std::int64_t share =
          iters > 0 ? stage.wall_ns * (t + 1) / iters : 0;
      f << "{\"stage\":" << (s + 1) << ",\"iter\":" << (t + 1)
        << ",\"M\":" << format_double(stage.truncation);
      if (!stage.dist_to_gold.empty()) {
        f << ",\"dist_to_gold\":"
          << format_double(stage.dist_to_gold[static_cast<size_t>(t)]);
      }
      f << ",\"objective\":"
        << format_double(stage.objective[static_cast<size_t>(t)])
        << ",\"elapsed_ns\":" << (elapsed + share) << "}\n";
    }
    elapsed += stage.wall_ns;
  }
}

void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::string& path) {
  auto f = open_out(path);
  f << "t,arm_index,reward,corrupted_flag,instant_regret,cumulative_regret\n";
  for (const auto& p : trajectory) {
    f << p.t << ',' << p.arm_index << ',' << format_double(p.reward) << ','
      << (p.corrupted ? 1 : 0) << ',' << format_double(p.instant_regret) << ','
      << format_double(p.cumulative_regret) << '\n';
  }
}

}  // namespace stir
