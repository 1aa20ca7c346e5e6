/**
 *  Copyright (c) 2026 by Contributors
 * @file graph_io.cc
 * @brief Loading and saving dataset directories.
 */
#include "hfg/graph_io.h"

#include <fstream>
#include <json.hpp>

#include "hfg/error.h"

namespace hfg {

namespace fs = std::filesystem;
using nlohmann::json;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes data(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw IoError(path.string(), "short read");
  }
  return data;
}

void write_file(const fs::path& path, std::span<const std::byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

FeatureMatrix read_feature_file(const fs::path& path, const std::string& space) {
  const Bytes data = read_file(path);
  try {
    ByteReader r(data);
    auto magic = r.get_raw(4);
    if (std::memcmp(magic.data(), kFeatureMagic, 4) != 0) {
      throw IoError(path.string(), "bad feature file magic");
    }
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    r.get<std::uint32_t>();  // reserved
    FeatureMatrix m(space, rows, cols);
    if (r.remaining() != m.values.size() * sizeof(float)) {
      throw IoError(path.string(), "payload size does not match header " +
                                       std::to_string(rows) + "x" + std::to_string(cols));
    }
    r.get_span(std::span<float>(m.values));
    return m;
  } catch (const ProtocolError& e) {
    throw IoError(path.string(), std::string("corrupt feature file: ") + e.what());
  }
}

void write_feature_file(const fs::path& path, const FeatureMatrix& m) {
  ByteWriter w;
  w.put_raw(std::as_bytes(std::span(kFeatureMagic)));
  w.put<std::uint32_t>(m.num_rows);
  w.put<std::uint32_t>(m.row_width);
  w.put<std::uint32_t>(0);
  w.put_span(std::span<const float>(m.values));
  write_file(path, w.take());
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
std::vector<T> read_scalar_file(const fs::path& path, std::uint64_t expected) {
  const Bytes data = read_file(path);
  if (data.size() != expected * sizeof(T)) {
    throw StructuralError(path.string() + ": expected " + std::to_string(expected) +
                          " entries, file holds " + std::to_string(data.size() / sizeof(T)));
  }
  ByteReader r(data);
  return r.get_vector<T>(expected);
}

template <typename T>
void write_scalar_file(const fs::path& path, std::span<const T> values) {
  ByteWriter w;
  w.put_span(values);
  write_file(path, w.take());
}

}  // namespace

Dataset load_graph(const fs::path& dir) {
  const fs::path schema_path = dir / "schema.json";
  if (!fs::exists(schema_path)) throw IoError(schema_path.string(), "missing schema.json");
  const json js = read_json(schema_path);

  Dataset ds;
  std::vector<std::string> vtypes;
  std::vector<EdgeType> etypes;
  try {
    for (const auto& vt : js.at("vertex_types")) {
      vtypes.push_back(vt.at("name").get<std::string>());
      ds.vertex_counts.push_back(vt.at("count").get<std::uint64_t>());
    }
    for (const auto& et : js.at("edge_types")) {
      etypes.push_back({et.at("src").get<std::string>(), et.at("relation").get<std::string>(),
                        et.at("dst").get<std::string>()});
    }
    ds.num_classes = js.value("num_classes", 0u);
    if (js.contains("dtype") && js.at("dtype").get<std::string>() != "float32") {
      throw StructuralError("only float32 features are supported");
    }
  } catch (const json::exception& e) {
    throw IoError(schema_path.string(), std::string("malformed schema: ") + e.what());
  }
  ds.schema = HeteroSchema(vtypes, etypes);
  const TypeOffsets voff{std::span<const std::uint64_t>(ds.vertex_counts)};

  std::vector<TypedEdgeList> edges(etypes.size());
  for (std::size_t e = 0; e < etypes.size(); ++e) {
    const fs::path p = dir / ("edges_" + etypes[e].relation + ".bin");
    const Bytes data = read_file(p);
    if (data.size() % 16 != 0) throw IoError(p.string(), "edge file size is not a multiple of 16");
    ByteReader r(data);
    edges[e].resize(data.size() / 16);
    for (auto& [s, d] : edges[e]) {
      s = r.get<std::uint64_t>();
      d = r.get<std::uint64_t>();
    }
  }

  std::vector<std::uint8_t> masks(voff.total(), 0);
  ds.vertex_features.resize(vtypes.size());
  bool any_labels = false;
  std::vector<std::int32_t> labels(voff.total(), -1);
  const auto& vjs = js.at("vertex_types");
  for (TypeId t = 0; t < vtypes.size(); ++t) {
    const auto& vt = vjs[t];
    const std::uint64_t count = ds.vertex_counts[t];
    if (vt.contains("mask")) {
      auto m = read_scalar_file<std::uint8_t>(dir / vt.at("mask").get<std::string>(), count);
      std::copy(m.begin(), m.end(), masks.begin() + voff.begin(t));
    }
    if (vt.contains("labels")) {
      auto l = read_scalar_file<std::int32_t>(dir / vt.at("labels").get<std::string>(), count);
      std::copy(l.begin(), l.end(), labels.begin() + voff.begin(t));
      any_labels = true;
    }
    if (vt.contains("features")) {
      const fs::path p = dir / vt.at("features").get<std::string>();
      FeatureMatrix fm = read_feature_file(p, vtypes[t]);
      if (fm.num_rows != count) {
        throw StructuralError(p.string() + ": feature rows " + std::to_string(fm.num_rows) +
                              " != vertex count " + std::to_string(count));
      }
      if (vt.contains("feat_dim") && vt.at("feat_dim").get<std::uint32_t>() != fm.row_width) {
        throw StructuralError(p.string() + ": feature width disagrees with schema feat_dim");
      }
      ds.vertex_features[t] = std::move(fm);
    }
  }
  if (any_labels) ds.labels = std::move(labels);

  ds.graph = homogenize(ds.schema, ds.vertex_counts, edges, std::move(masks));

  ds.edge_features.resize(etypes.size());
  const auto& ejs = js.at("edge_types");
  for (TypeId e = 0; e < etypes.size(); ++e) {
    if (!ejs[e].contains("features")) continue;
    const fs::path p = dir / ejs[e].at("features").get<std::string>();
    FeatureMatrix fm = read_feature_file(p, etypes[e].relation);
    if (fm.num_rows != ds.graph.edge_offsets().count(e)) {
      throw StructuralError(p.string() + ": edge feature rows do not match edge count");
    }
    ds.edge_features[e] = std::move(fm);
  }
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  const auto& schema = ds.schema;
  const auto& g = ds.graph;
  json js;
  js["dtype"] = "float32";
  js["num_classes"] = ds.num_classes;
  json vjs = json::array();
  for (TypeId t = 0; t < schema.num_vertex_types(); ++t) {
    const std::string& name = schema.vertex_types()[t];
    json vt{{"name", name}, {"count", g.vertex_offsets().count(t)}};
    const auto begin = g.vertex_offsets().begin(t);
    const auto count = g.vertex_offsets().count(t);
    bool has_mask = false;
    for (std::uint64_t i = 0; i < count; ++i) has_mask |= g.masks()[begin + i] != 0;
    if (has_mask) {
      vt["mask"] = "mask_" + name + ".bin";
      write_scalar_file<std::uint8_t>(dir / vt["mask"].get<std::string>(),
                                      std::span(g.masks()).subspan(begin, count));
    }
    if (!ds.labels.empty()) {
      vt["labels"] = "labels_" + name + ".bin";
      write_scalar_file<std::int32_t>(dir / vt["labels"].get<std::string>(),
                                      std::span(ds.labels).subspan(begin, count));
    }
    if (t < ds.vertex_features.size() && ds.vertex_features[t]) {
      vt["features"] = "feat_" + name + ".bin";
      vt["feat_dim"] = ds.vertex_features[t]->row_width;
      write_feature_file(dir / vt["features"].get<std::string>(), *ds.vertex_features[t]);
    }
    vjs.push_back(std::move(vt));
  }
  js["vertex_types"] = std::move(vjs);

  const auto endpoints = g.edge_endpoints();
  json ejs = json::array();
  for (TypeId e = 0; e < schema.num_edge_types(); ++e) {
    const auto& et = schema.edge_types()[e];
    json ej{{"src", et.src_type}, {"relation", et.relation}, {"dst", et.dst_type}};
    const TypeId st = schema.edge_src_type(e);
    const TypeId dt = schema.edge_dst_type(e);
    ByteWriter w;
    for (EdgeId id = g.edge_offsets().begin(e); id < g.edge_offsets().begin(e + 1); ++id) {
      w.put<std::uint64_t>(endpoints[id].first - g.vertex_offsets().begin(st));
      w.put<std::uint64_t>(endpoints[id].second - g.vertex_offsets().begin(dt));
    }
    write_file(dir / ("edges_" + et.relation + ".bin"), w.take());
    if (e < ds.edge_features.size() && ds.edge_features[e]) {
      ej["features"] = "efeat_" + et.relation + ".bin";
      write_feature_file(dir / ej["features"].get<std::string>(), *ds.edge_features[e]);
    }
    ejs.push_back(std::move(ej));
  }
  js["edge_types"] = std::move(ejs);

  std::ofstream out(dir / "schema.json");
  if (!out) throw IoError((dir / "schema.json").string(), "cannot open for writing");
  out << js.dump(2) << '\n';
}

}  // namespace hfg
