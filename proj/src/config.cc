/* Copyright 2026 The bam Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bam/config.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bam {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int ToInt(const std::string& key, const std::string& v) {
  size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key +
                                "' expects an integer, got '" + v + "'");
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key +
                                "' expects a number, got '" + v + "'");
  }
  return out;
}

bool ToBool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("config key '" + key +
                              "' expects a boolean, got '" + v + "'");
}

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
Field IntField(T Config::*member) {
  return {[member](Config& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<T>(ToInt(k, v));
          },
          [member](const Config& c) { return std::to_string(c.*member); }};
}

Field DoubleField(double Config::*member) {
  return {[member](Config& c, const std::string& k, const std::string& v) {
            c.*member = ToDouble(k, v);
          },
          [member](const Config& c) { return Fmt(c.*member); }};
}

Field BoolField(bool Config::*member) {
  return {[member](Config& c, const std::string& k, const std::string& v) {
            c.*member = ToBool(k, v);
          },
          [member](const Config& c) {
            return std::string(c.*member ? "1" : "0");
          }};
}

Field SeedField() {
  return {[](Config& c, const std::string& k, const std::string& v) {
            size_t used = 0;
            uint64_t out = 0;
            try {
              out = std::stoull(v, &used);
            } catch (const std::exception&) {
              used = 0;
            }
            if (used != v.size() || v.empty() || v[0] == '-') {
              throw std::invalid_argument("config key '" + k +
                                          "' expects a non-negative integer");
            }
            c.seed = out;
          },
          [](const Config& c) { return std::to_string(c.seed); }};
}

const std::vector<std::pair<std::string, Field>>& Fields() {
  static const auto* fields = new std::vector<std::pair<std::string, Field>>{
      {"D", IntField(&Config::D)},
      {"heads", IntField(&Config::heads)},
      {"M", IntField(&Config::M)},
      {"K", IntField(&Config::K)},
      {"alpha", DoubleField(&Config::alpha)},
      {"L_E", IntField(&Config::L_E)},
      {"L_D", IntField(&Config::L_D)},
      {"lambda_l1", DoubleField(&Config::lambda_l1)},
      {"lambda_iou", DoubleField(&Config::lambda_iou)},
      {"lambda_sal", DoubleField(&Config::lambda_sal)},
      {"lambda_sal_unlabeled", DoubleField(&Config::lambda_sal_unlabeled)},
      {"lambda_regul", DoubleField(&Config::lambda_regul)},
      {"lambda_qual", DoubleField(&Config::lambda_qual)},
      {"lr", DoubleField(&Config::lr)},
      {"batch", IntField(&Config::batch)},
      {"epochs", IntField(&Config::epochs)},
      {"seed", SeedField()},
      {"deep_supervision", BoolField(&Config::deep_supervision)},
      {"video_dim", IntField(&Config::video_dim)},
      {"text_dim", IntField(&Config::text_dim)},
      {"clip_stride", DoubleField(&Config::clip_stride)},
      {"weight_decay", DoubleField(&Config::weight_decay)},
      {"grad_clip", DoubleField(&Config::grad_clip)},
      {"dropout", DoubleField(&Config::dropout)},
      {"tau", DoubleField(&Config::tau)},
      {"ffn_mult", IntField(&Config::ffn_mult)},
      {"max_steps", IntField(&Config::max_steps)},
      {"lr_drop_step", IntField(&Config::lr_drop_step)},
      {"lr_drop_factor", DoubleField(&Config::lr_drop_factor)},
      {"max_clips", IntField(&Config::max_clips)},
      {"eval_every", IntField(&Config::eval_every)},
      {"detach_quality_target", BoolField(&Config::detach_quality_target)},
  };
  return *fields;
}

}  // namespace

void Config::Validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + key +
                                         " must be positive");
  };
  positive(D > 0, "D");
  positive(heads > 0, "heads");
  positive(M > 0, "M");
  positive(K > 0, "K");
  positive(alpha > 0, "alpha");
  positive(L_E >= 0, "L_E");
  positive(L_D >= 0, "L_D");
  positive(lambda_l1 >= 0 && lambda_iou >= 0, "lambda_l1/lambda_iou");
  positive(lambda_sal >= 0 && lambda_sal_unlabeled >= 0, "lambda_sal");
  positive(lambda_regul >= 0 && lambda_qual >= 0, "lambda_regul/lambda_qual");
  positive(lr > 0, "lr");
  positive(batch > 0, "batch");
  positive(epochs > 0, "epochs");
  positive(clip_stride > 0, "clip_stride");
  positive(tau > 0, "tau");
  positive(ffn_mult > 0, "ffn_mult");
  positive(lr_drop_factor > 0, "lr_drop_factor");
  if (D % heads != 0) {
    throw std::invalid_argument("config: D must be divisible by heads");
  }
  if (D % 2 != 0) throw std::invalid_argument("config: D must be even");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("config: dropout must be in [0, 1)");
  }
  if (video_dim < 0 || text_dim < 0 || max_steps < 0 || max_clips < 0 ||
      eval_every < 0 || weight_decay < 0 || lr_drop_step < 0) {
    throw std::invalid_argument("config: negative value for a count key");
  }
}

std::map<std::string, std::string> Config::ToMap() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : Fields()) out[key] = field.get(*this);
  return out;
}

std::string Config::ToText() const {
  std::string out;
  for (const auto& [key, field] : Fields()) {
    out += key + " = " + field.get(*this) + "\n";
  }
  return out;
}

void SetConfigValue(Config& config, const std::string& key,
                    const std::string& value) {
  for (const auto& [name, field] : Fields()) {
    if (name == key) {
      field.set(config, key, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

Config ParseConfig(const std::string& text) {
  Config config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    SetConfigValue(config, Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return config;
}

Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = ParseConfig(ss.str());
  ApplyEnvironment(c);
  return c;
}

void ApplyEnvironment(Config& config) {
  if (const char* seed = std::getenv("BAM_SEED"); seed && *seed) {
    SetConfigValue(config, "seed", seed);
  }
}

}  // namespace bam
