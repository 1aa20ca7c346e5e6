/**
 *  Copyright (c) 2026 by Contributors
 * @file partition_io.cc
 */
#include "hfg/partition_io.h"

#include <fstream>
#include <json.hpp>

#include "hfg/error.h"
#include "hfg/graph_io.h"

namespace hfg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kPartMagic[4] = {'H', 'F', 'P', '1'};
constexpr std::uint32_t kPartVersion = 1;

fs::path part_dir(const fs::path& dir, std::uint32_t k) { return dir / ("part" + std::to_string(k)); }

}  // namespace

void save_book(const fs::path& dir, const PartitionBook& book) {
  fs::create_directories(dir);
  const auto& fl = book.first_level;
  json js;
  js["format"] = "hfg-book-1";
  js["k"] = fl.k;
  js["trainers_per_machine"] = book.trainers_per_machine;
  js["eps_requested"] = fl.eps_requested;
  js["eps_used"] = fl.eps_used;
  js["relaxed"] = fl.relaxed;
  js["balanced"] = fl.balanced;
  js["ncon"] = fl.ncon;
  js["part_sums"] = fl.part_sums;
  js["second_eps_used"] = book.second_eps_used;
  js["second_relaxed"] = book.second_relaxed;
  js["sub_train_counts"] = book.sub_train_counts;
  js["vertex_type_offsets"] = book.vertex_offsets.offsets();
  js["edge_type_offsets"] = book.edge_offsets.offsets();
  js["part_of"] = fl.part_of;
  js["sub_part"] = book.sub_part;
  js["edge_part"] = book.edge_part;
  json schema;
  schema["vertex_types"] = book.schema.vertex_types();
  json ets = json::array();
  for (const auto& et : book.schema.edge_types()) {
    ets.push_back({{"src", et.src_type}, {"relation", et.relation}, {"dst", et.dst_type}});
  }
  schema["edge_types"] = ets;
  schema["vertex_feat_dims"] = book.vertex_feat_dims;
  schema["edge_feat_dims"] = book.edge_feat_dims;
  schema["num_classes"] = book.num_classes;
  js["schema"] = schema;
  std::ofstream out(dir / "book.json");
  if (!out) throw IoError((dir / "book.json").string(), "cannot open for writing");
  out << js.dump() << '\n';
}

PartitionBook load_book(const fs::path& dir) {
  const fs::path path = dir / "book.json";
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  PartitionBook book;
  try {
    const json js = json::parse(in);
    auto& fl = book.first_level;
    fl.k = js.at("k").get<std::uint32_t>();
    book.trainers_per_machine = js.at("trainers_per_machine").get<std::uint32_t>();
    fl.eps_requested = js.at("eps_requested").get<double>();
    fl.eps_used = js.at("eps_used").get<double>();
    fl.relaxed = js.at("relaxed").get<bool>();
    fl.balanced = js.at("balanced").get<bool>();
    fl.ncon = js.at("ncon").get<std::size_t>();
    fl.part_sums = js.at("part_sums").get<std::vector<std::int64_t>>();
    fl.part_of = js.at("part_of").get<std::vector<PartId>>();
    book.second_eps_used = js.at("second_eps_used").get<std::vector<double>>();
    book.second_relaxed = js.at("second_relaxed").get<std::vector<bool>>();
    book.sub_train_counts = js.at("sub_train_counts").get<std::vector<std::uint64_t>>();
    book.vertex_offsets =
        TypeOffsets::from_offsets(js.at("vertex_type_offsets").get<std::vector<std::uint64_t>>());
    book.edge_offsets =
        TypeOffsets::from_offsets(js.at("edge_type_offsets").get<std::vector<std::uint64_t>>());
    book.sub_part = js.at("sub_part").get<std::vector<std::uint32_t>>();
    book.edge_part = js.at("edge_part").get<std::vector<PartId>>();
    const json& schema = js.at("schema");
    std::vector<EdgeType> ets;
    for (const auto& e : schema.at("edge_types")) {
      ets.push_back({e.at("src").get<std::string>(), e.at("relation").get<std::string>(),
                     e.at("dst").get<std::string>()});
    }
    book.schema = HeteroSchema(schema.at("vertex_types").get<std::vector<std::string>>(), ets);
    book.vertex_feat_dims = schema.at("vertex_feat_dims").get<std::vector<std::uint32_t>>();
    book.edge_feat_dims = schema.at("edge_feat_dims").get<std::vector<std::uint32_t>>();
    book.num_classes = schema.at("num_classes").get<std::uint32_t>();
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("malformed partition book: ") + e.what());
  }
  const auto n = book.vertex_offsets.total();
  if (book.first_level.part_of.size() != n || book.sub_part.size() != n ||
      book.edge_part.size() != book.edge_offsets.total()) {
    throw StructuralError(path.string() + ": assignment arrays do not match type offsets");
  }
  for (auto p : book.first_level.part_of) {
    if (p >= book.first_level.k) throw StructuralError(path.string() + ": partition id out of range");
  }
  return book;
}

Bytes encode_physical_partition(const PhysicalPartition& part) {
  ByteWriter w;
  w.put_raw(std::as_bytes(std::span(kPartMagic)));
  w.put<std::uint32_t>(kPartVersion);
  w.put<std::uint32_t>(part.id);
  w.put<std::uint64_t>(part.num_core);
  w.put<std::uint64_t>(part.num_local());
  w.put<std::uint64_t>(part.num_owned_edges());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(part.vertex_offsets.num_types()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(part.edge_offsets.num_types()));
  w.put_span(std::span<const std::uint64_t>(part.vertex_offsets.offsets()));
  w.put_span(std::span<const std::uint64_t>(part.edge_offsets.offsets()));
  w.put_span(std::span<const std::uint64_t>(part.local_to_global));
  w.put_span(std::span<const std::uint64_t>(part.indptr));
  w.put_span(std::span<const std::uint64_t>(part.indices));
  w.put_span(std::span<const std::uint64_t>(part.edge_ids));
  w.put_span(std::span<const std::uint8_t>(part.core_masks));
  w.put<std::uint8_t>(part.core_labels.empty() ? 0 : 1);
  if (!part.core_labels.empty()) w.put_span(std::span<const std::int32_t>(part.core_labels));
  return w.take();
}

PhysicalPartition decode_physical_partition(std::span<const std::byte> data) {
  ByteReader r(data);
  auto magic = r.get_raw(4);
  if (std::memcmp(magic.data(), kPartMagic, 4) != 0) throw ProtocolError("bad partition magic");
  if (r.get<std::uint32_t>() != kPartVersion) throw ProtocolError("unsupported partition version");
  PhysicalPartition p;
  p.id = r.get<std::uint32_t>();
  p.num_core = r.get<std::uint64_t>();
  const auto num_local = r.get<std::uint64_t>();
  const auto num_edges = r.get<std::uint64_t>();
  const auto nvt = r.get<std::uint32_t>();
  const auto net = r.get<std::uint32_t>();
  p.vertex_offsets = TypeOffsets::from_offsets(r.get_vector<std::uint64_t>(nvt + 1ull));
  p.edge_offsets = TypeOffsets::from_offsets(r.get_vector<std::uint64_t>(net + 1ull));
  p.local_to_global = r.get_vector<std::uint64_t>(num_local);
  p.indptr = r.get_vector<std::uint64_t>(num_local + 1);
  p.indices = r.get_vector<std::uint64_t>(num_edges);
  p.edge_ids = r.get_vector<std::uint64_t>(num_edges);
  p.core_masks = r.get_vector<std::uint8_t>(p.num_core);
  if (r.get<std::uint8_t>() != 0) p.core_labels = r.get_vector<std::int32_t>(p.num_core);
  r.expect_done();
  p.validate();
  return p;
}

void save_partition(const fs::path& dir, std::uint32_t k, const PartitionShard& shard,
                    const HeteroSchema& schema) {
  const fs::path pd = part_dir(dir, k);
  fs::create_directories(pd);
  write_file(pd / "graph.bin", encode_physical_partition(shard.graph));
  for (TypeId t = 0; t < shard.vertex_features.size(); ++t) {
    if (shard.vertex_features[t]) {
      write_feature_file(pd / ("feat_" + schema.vertex_types()[t] + ".bin"), *shard.vertex_features[t]);
    }
  }
  for (TypeId e = 0; e < shard.edge_features.size(); ++e) {
    if (shard.edge_features[e]) {
      write_feature_file(pd / ("efeat_" + schema.edge_types()[e].relation + ".bin"),
                         *shard.edge_features[e]);
    }
  }
}

PartitionShard load_partition(const fs::path& dir, std::uint32_t k, const PartitionBook& book) {
  const fs::path pd = part_dir(dir, k);
  const fs::path gpath = pd / "graph.bin";
  PartitionShard shard;
  try {
    shard.graph = decode_physical_partition(read_file(gpath));
  } catch (const ProtocolError& e) {
    throw IoError(gpath.string(), std::string("corrupt partition: ") + e.what());
  }
  if (shard.graph.id != k) throw StructuralError(gpath.string() + ": partition id mismatch");
  const auto& schema = book.schema;
  shard.vertex_features.resize(schema.num_vertex_types());
  for (TypeId t = 0; t < schema.num_vertex_types(); ++t) {
    if (t >= book.vertex_feat_dims.size() || book.vertex_feat_dims[t] == 0) continue;
    const fs::path fp = pd / ("feat_" + schema.vertex_types()[t] + ".bin");
    FeatureMatrix fm = read_feature_file(fp, schema.vertex_types()[t]);
    const auto expected = owned_typed_vertices(book, k, t).size();
    if (fm.num_rows != expected || fm.row_width != book.vertex_feat_dims[t]) {
      throw StructuralError(fp.string() + ": shape does not match partition book");
    }
    shard.vertex_features[t] = std::move(fm);
  }
  shard.edge_features.resize(schema.num_edge_types());
  for (TypeId e = 0; e < schema.num_edge_types(); ++e) {
    if (e >= book.edge_feat_dims.size() || book.edge_feat_dims[e] == 0) continue;
    const fs::path fp = pd / ("efeat_" + schema.edge_types()[e].relation + ".bin");
    FeatureMatrix fm = read_feature_file(fp, schema.edge_types()[e].relation);
    if (fm.num_rows != owned_typed_edges(book, k, e).size()) {
      throw StructuralError(fp.string() + ": shape does not match partition book");
    }
    shard.edge_features[e] = std::move(fm);
  }
  return shard;
}

void save_partitioned(const fs::path& dir, const PartitionBook& book,
                      const std::vector<PartitionShard>& shards) {
  save_book(dir, book);
  for (std::uint32_t k = 0; k < shards.size(); ++k) save_partition(dir, k, shards[k], book.schema);
}

}  // namespace hfg
