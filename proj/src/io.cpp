#include "tscm/io.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace tscm {

namespace {

using json = nlohmann::ordered_json;

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw validation_error(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
  }
}

// Wraps json access so type errors surface with file/line context instead of
// nlohmann's internal messages.
template <typename T>
T field(const json& j, const char* key, const std::string& path, std::size_t lineno) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw validation_error(path + ":" + std::to_string(lineno) + ": bad or missing field '" +
                           std::string(key) + "': " + e.what());
  }
}

json read_header(std::istream& in, const std::string& path, const char* format) {
  std::string line;
  if (!std::getline(in, line)) {
    throw validation_error(path + ": empty file, expected '" + std::string(format) + "' header");
  }
  json h = parse_line(line, path, 1);
  if (field<std::string>(h, "format", path, 1) != format) {
    throw validation_error(path + ":1: expected format '" + std::string(format) + "', got '" +
                           h.value("format", "?") + "'");
  }
  if (field<int>(h, "version", path, 1) != 1) {
    throw validation_error(path + ":1: unsupported version");
  }
  return h;
}

void for_each_record(std::istream& in, const std::string& path,
                     const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    fn(parse_line(line, path, lineno), lineno);
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  return out;
}

json make_header(const char* format) {
  json h;
  h["format"] = format;
  h["version"] = 1;
  return h;
}

void append_producer(json& h, const ProducerInfo& info) {
  if (info.seed) h["seed"] = *info.seed;
  if (info.tool_version) h["tool_version"] = *info.tool_version;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw io_error("write failed for '" + path + "'");
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-dataset");
  Dataset ds;
  ds.C = field<int>(h, "C", path, 1);
  ds.K = field<int>(h, "K", path, 1);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    ImageRecord rec;
    rec.image_id = field<std::string>(j, "image_id", path, lineno);
    for (const json& jo : field<json>(j, "objects", path, lineno)) {
      ObjectInstance obj;
      obj.category = field<int>(jo, "category", path, lineno);
      auto box = field<std::vector<double>>(jo, "box", path, lineno);
      if (box.size() != 4) {
        throw validation_error(path + ":" + std::to_string(lineno) + ": box must have 4 entries");
      }
      obj.box = BoundingBox{box[0], box[1], box[2], box[3]};
      rec.objects.push_back(obj);
    }
    for (const json& jt : field<json>(j, "triplets", path, lineno)) {
      auto t = jt.get<std::vector<int>>();
      if (t.size() != 3) {
        throw validation_error(path + ":" + std::to_string(lineno) +
                               ": triplet must have 3 entries");
      }
      rec.triplets.push_back(TripletInstance{t[0], t[1], t[2]});
    }
    ds.records.push_back(std::move(rec));
  });
  validate(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path, const ProducerInfo& info) {
  validate(ds);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-dataset");
  h["C"] = ds.C;
  h["K"] = ds.K;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (const ImageRecord& rec : ds.records) {
    json j;
    j["image_id"] = rec.image_id;
    j["objects"] = json::array();
    for (const ObjectInstance& obj : rec.objects) {
      json jo;
      jo["category"] = obj.category;
      jo["box"] = {obj.box.cx, obj.box.cy, obj.box.h, obj.box.w};
      j["objects"].push_back(std::move(jo));
    }
    j["triplets"] = json::array();
    for (const TripletInstance& t : rec.triplets) {
      j["triplets"].push_back({t.subject_idx, t.object_idx, t.predicate});
    }
    out << j.dump() << '\n';
  }
  finish(out, path);
}

LogitDump load_logits(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-logits");
  LogitDump dump;
  dump.K = field<int>(h, "K", path, 1);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    LogitRecord rec;
    rec.image_id = field<std::string>(j, "image_id", path, lineno);
    rec.pair_id = field<int>(j, "pair_id", path, lineno);
    rec.gt_predicate = field<int>(j, "gt", path, lineno);
    rec.fg_logits = field<std::vector<double>>(j, "fg", path, lineno);
    rec.bg_logit = field<double>(j, "bg", path, lineno);
    if (static_cast<int>(rec.fg_logits.size()) != dump.K) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": logit arity mismatch");
    }
    dump.records.push_back(std::move(rec));
  });
  validate(dump);
  return dump;
}

void save_logits(const LogitDump& dump, const std::string& path, const ProducerInfo& info) {
  validate(dump);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-logits");
  h["K"] = dump.K;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (const LogitRecord& rec : dump.records) {
    json j;
    j["image_id"] = rec.image_id;
    j["pair_id"] = rec.pair_id;
    j["gt"] = rec.gt_predicate;
    j["fg"] = rec.fg_logits;
    j["bg"] = rec.bg_logit;
    out << j.dump() << '\n';
  }
  finish(out, path);
}

PopulationTable load_populations(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-pop");
  const int K = field<int>(h, "K", path, 1);
  PopulationTable pop;
  pop.alpha = field<int>(h, "alpha", path, 1);
  pop.populations.assign(K, {});
  std::vector<bool> seen(K, false);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    const int t = field<int>(j, "predicate", path, lineno);
    if (t < 0 || t >= K) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": predicate out of range");
    }
    if (seen[t]) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate predicate line");
    }
    seen[t] = true;
    pop.populations[t] = field<std::vector<int>>(j, "population", path, lineno);
  });
  for (int t = 0; t < K; ++t) {
    if (!seen[t]) {
      throw validation_error(path + ": missing population line for predicate " +
                             std::to_string(t));
    }
  }
  validate(pop);
  return pop;
}

void save_populations(const PopulationTable& pop, const std::string& path,
                      const ProducerInfo& info) {
  validate(pop);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-pop");
  h["K"] = pop.K();
  h["alpha"] = pop.alpha;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (int t = 0; t < pop.K(); ++t) {
    json j;
    j["predicate"] = t;
    j["population"] = pop.populations[t];
    out << j.dump() << '\n';
  }
  finish(out, path);
}

AdjustmentMatrix load_adjustment(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-adj");
  const int K = field<int>(h, "K", path, 1);
  AdjustmentMatrix adj;
  adj.beta = field<int>(h, "beta", path, 1);
  adj.factors.assign(K, {});
  std::vector<bool> seen(K, false);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    const int t = field<int>(j, "predicate", path, lineno);
    if (t < 0 || t >= K) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": predicate out of range");
    }
    if (seen[t]) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate predicate line");
    }
    seen[t] = true;
    adj.factors[t] = field<std::vector<double>>(j, "factors", path, lineno);
  });
  for (int t = 0; t < K; ++t) {
    if (!seen[t]) {
      throw validation_error(path + ": missing factor line for predicate " + std::to_string(t));
    }
  }
  validate(adj);
  return adj;
}

void save_adjustment(const AdjustmentMatrix& adj, const std::string& path,
                     const ProducerInfo& info) {
  validate(adj);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-adj");
  h["K"] = adj.K();
  h["beta"] = adj.beta;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (int t = 0; t < adj.K(); ++t) {
    json j;
    j["predicate"] = t;
    j["factors"] = adj.factors[t];
    out << j.dump() << '\n';
  }
  finish(out, path);
}

FeatureSet load_features(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-feat");
  FeatureSet feats;
  feats.d = field<int>(h, "d", path, 1);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    feats.labels.push_back(field<int>(j, "label", path, lineno));
    auto row = field<std::vector<double>>(j, "x", path, lineno);
    if (static_cast<int>(row.size()) != feats.d) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": feature arity mismatch");
    }
    feats.x.push_back(std::move(row));
  });
  validate(feats);
  return feats;
}

void save_features(const FeatureSet& feats, const std::string& path, const ProducerInfo& info) {
  validate(feats);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-feat");
  h["d"] = feats.d;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (int i = 0; i < feats.n(); ++i) {
    json j;
    j["label"] = feats.labels[i];
    j["x"] = feats.x[i];
    out << j.dump() << '\n';
  }
  finish(out, path);
}

PredictionSet load_predictions(const std::string& path) {
  std::ifstream in = open_in(path);
  json h = read_header(in, path, "tscm-pred");
  PredictionSet preds;
  preds.K = field<int>(h, "K", path, 1);
  for_each_record(in, path, [&](const json& j, std::size_t lineno) {
    PredictionRecord rec;
    rec.image_id = field<std::string>(j, "image_id", path, lineno);
    rec.pair_id = field<int>(j, "pair_id", path, lineno);
    rec.gt_predicate = field<int>(j, "gt", path, lineno);
    rec.predicted = field<int>(j, "pred", path, lineno);
    rec.scores = field<std::vector<double>>(j, "score", path, lineno);
    if (static_cast<int>(rec.scores.size()) != preds.K) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": score arity mismatch");
    }
    preds.records.push_back(std::move(rec));
  });
  validate(preds);
  return preds;
}

void save_predictions(const PredictionSet& preds, const std::string& path,
                      const ProducerInfo& info) {
  validate(preds);
  std::ofstream out = open_out(path);
  json h = make_header("tscm-pred");
  h["K"] = preds.K;
  append_producer(h, info);
  out << h.dump() << '\n';
  for (const PredictionRecord& rec : preds.records) {
    json j;
    j["image_id"] = rec.image_id;
    j["pair_id"] = rec.pair_id;
    j["gt"] = rec.gt_predicate;
    j["pred"] = rec.predicted;
    j["score"] = rec.scores;
    out << j.dump() << '\n';
  }
  finish(out, path);
}

}  // namespace tscm
