// heteroforge: dataset generation, partitioning, node servers, training runs,
// ablation benchmarks and inspection.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hfg/cluster_config.h"
#include "hfg/error.h"
#include "hfg/graph_io.h"
#include "hfg/log.h"
#include "hfg/node.h"
#include "hfg/partition.h"
#include "hfg/partition_io.h"
#include "hfg/synth.h"
#include "hfg/trainer.h"

namespace fs = std::filesystem;

namespace hfg::cli {
namespace {

std::vector<std::uint32_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw ArgumentError(std::string("bad ") + what + " '" + text + "'");
    }
  }
  if (out.empty()) throw ArgumentError(std::string("empty ") + what);
  return out;
}

Dataset load_dataset_dir(const fs::path& dir) {
  if (!fs::exists(dir / "schema.json")) throw ConfigError("no dataset at " + dir.string());
  return load_graph(dir);
}

PartitionBook load_book_dir(const fs::path& dir) {
  if (!fs::exists(dir / "book.json")) throw ConfigError("no partition at " + dir.string());
  return load_book(dir);
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  fs::path out;
  std::string kind = "planted";
  std::uint64_t vertices = 1000;
  std::uint64_t users = 600, items = 300, categories = 20;
  std::uint32_t clusters = 4;
  std::uint32_t clique_size = 8;
  double p_in = 0.05, p_out = 0.002;
  std::uint32_t feat_dim = 16;
  double train_frac = 0.6, val_frac = 0.2, test_frac = 0.2;
  bool bidirectional = false;
  std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
  Dataset d;
  if (a.kind == "cliques") {
    d = generate_two_cliques(a.clique_size);
  } else {
    SynthSpec s;
    if (a.kind == "hetero") {
      s = hetero_spec(a.users, a.items, a.categories, a.clusters, a.feat_dim, a.seed);
    } else {
      s.vertex_counts = {a.vertices};
      s.clusters = a.clusters;
      s.feat_dim = a.feat_dim;
      s.seed = a.seed;
    }
    s.p_in = a.p_in;
    s.p_out = a.p_out;
    s.bidirectional = a.bidirectional;
    s.train_frac = a.train_frac;
    s.val_frac = a.val_frac;
    s.test_frac = a.test_frac;
    d = generate_planted(s);
  }
  fs::create_directories(a.out);
  save_dataset(a.out, d);
  std::printf("wrote %s: %llu vertices, %llu edges, %zu vertex types, %zu edge types\n", a.out.c_str(),
              static_cast<unsigned long long>(d.graph.num_vertices()),
              static_cast<unsigned long long>(d.graph.num_edges()), d.schema.num_vertex_types(),
              d.schema.num_edge_types());
  return 0;
}

// ---------------------------------------------------------- partition

struct PartitionArgs {
  fs::path data;
  fs::path out;
  std::uint32_t machines = 1;
  std::uint32_t trainers = 1;
  double eps = 0.05;
  std::uint64_t seed = 0;
  bool random = false;
  bool random_second = false;
};

void print_balance(const PartitionBook& book, const Constraints& c) {
  const auto& fl = book.first_level;
  const auto totals = c.column_sums();
  std::printf("%-12s %10s  per-part sums\n", "constraint", "max/mean");
  for (std::size_t j = 0; j < c.ncon; ++j) {
    const double mean = static_cast<double>(totals[j]) / fl.k;
    std::int64_t worst = 0;
    std::ostringstream parts;
    for (std::uint32_t p = 0; p < fl.k; ++p) {
      const auto v = fl.part_sums[p * fl.ncon + j];
      worst = std::max(worst, v);
      parts << ' ' << v;
    }
    std::printf("%-12s %10.3f %s\n", c.names[j].c_str(), mean > 0 ? worst / mean : 0.0, parts.str().c_str());
  }
}

int cmd_partition(const PartitionArgs& a) {
  const Dataset d = load_dataset_dir(a.data);
  PartitionOptions po;
  po.machines = a.machines;
  po.trainers_per_machine = a.trainers;
  po.eps = a.eps;
  po.seed = a.seed;
  po.random_first_level = a.random;
  po.random_second_level = a.random_second;
  const PartitionBook book = partition_dataset(d, po);
  const auto shards = materialize_partitions(d, book);
  save_partitioned(a.out, book, shards);

  const auto& fl = book.first_level;
  std::printf("edge cut: %llu of %llu edges\n",
              static_cast<unsigned long long>(edge_cut(d.graph, fl.part_of)),
              static_cast<unsigned long long>(d.graph.num_edges()));
  std::printf("machines %u, trainers per machine %u, eps requested %.3f used %.3f%s\n", fl.k,
              book.trainers_per_machine, fl.eps_requested, fl.eps_used, fl.relaxed ? " (relaxed)" : "");
  print_balance(book, build_constraints(d.graph));
  for (std::uint32_t k = 0; k < fl.k; ++k) {
    std::printf("machine %u: train per trainer", k);
    for (std::uint32_t t = 0; t < book.trainers_per_machine; ++t) {
      std::printf(" %llu", static_cast<unsigned long long>(book.sub_train_counts[k * book.trainers_per_machine + t]));
    }
    std::printf("%s\n", book.second_relaxed[k] ? " (relaxed)" : "");
  }
  return 0;
}

// ------------------------------------------------------ serve / train

struct RunArgs {
  fs::path part;
  fs::path out;
  std::uint32_t trainers = 0;
  std::uint32_t hidden = 64;
  std::string fanouts = "10,5";
  std::size_t batch_size = 32;
  float lr = 0.1f;
  std::uint32_t epochs = 1;
  std::string task = "vertex";
  std::uint32_t negatives = 1;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;
  std::string capacities = "25,5,1";
  bool serial_pipeline = false;
  bool reference = false;
  bool evaluate = false;
  std::int64_t rpc_latency_us = 0;
  std::int64_t device_latency_us = 0;
  bool metrics = false;

  void add_to(CLI::App* app) {
    app->add_option("--part", part, "Partition directory")->required();
    app->add_option("--out", out, "Output directory for logs")->required();
    app->add_option("--trainers", trainers, "Expected trainers per machine (checked against the book)");
    app->add_option("--hidden", hidden, "Hidden width");
    app->add_option("--fanouts", fanouts, "Per-layer fanouts, input layer first");
    app->add_option("--batch-size", batch_size, "Seeds per trainer per step");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--epochs", epochs, "Epochs");
    app->add_option("--task", task, "vertex or link")->check(CLI::IsMember({"vertex", "link"}));
    app->add_option("--negatives", negatives, "Negatives per positive (link task)");
    app->add_option("--seed", seed, "Seed");
    app->add_option("--max-steps", max_steps, "Cap on steps per epoch (0 = none)");
    app->add_option("--capacities", capacities, "Stage capacities sample,cpu,device");
    app->add_flag("--serial-pipeline", serial_pipeline, "Force capacities 1,1,1");
    app->add_flag("--reference-executor", reference, "Run stages inline without the pipeline");
    app->add_flag("--evaluate", evaluate, "Score the training set after every epoch");
    app->add_option("--rpc-latency-us", rpc_latency_us, "Latency injected before every RPC handler");
    app->add_option("--device-latency-us", device_latency_us, "Extra time per device stage");
    app->add_flag("--metrics", metrics, "Write per-trainer stage CSVs");
  }

  std::vector<std::string> to_args() const {
    std::vector<std::string> v{"--part", part.string(), "--out", out.string(),
                               "--hidden", std::to_string(hidden), "--fanouts", fanouts,
                               "--batch-size", std::to_string(batch_size), "--lr", std::to_string(lr),
                               "--epochs", std::to_string(epochs), "--task", task,
                               "--negatives", std::to_string(negatives), "--seed", std::to_string(seed),
                               "--max-steps", std::to_string(max_steps), "--capacities", capacities,
                               "--rpc-latency-us", std::to_string(rpc_latency_us),
                               "--device-latency-us", std::to_string(device_latency_us)};
    if (trainers) v.insert(v.end(), {"--trainers", std::to_string(trainers)});
    if (serial_pipeline) v.push_back("--serial-pipeline");
    if (reference) v.push_back("--reference-executor");
    if (evaluate) v.push_back("--evaluate");
    if (metrics) v.push_back("--metrics");
    return v;
  }

  NodeRunOptions run_options() const {
    NodeRunOptions o;
    o.train.fanouts = parse_list(fanouts, "fanouts");
    o.train.layers = static_cast<std::uint32_t>(o.train.fanouts.size());
    o.train.hidden = hidden;
    o.train.batch_size = batch_size;
    o.train.lr = lr;
    o.train.epochs = epochs;
    o.train.task = task == "link" ? TaskKind::Link : TaskKind::Vertex;
    o.train.num_negatives = negatives;
    o.train.seed = seed;
    if (max_steps) o.train.max_steps_per_epoch = max_steps;
    o.train.validate();
    o.capacities = serial_pipeline ? CapacityConfig::serial() : CapacityConfig::parse(capacities);
    o.reference_executor = reference;
    o.device_latency = std::chrono::microseconds(device_latency_us);
    o.evaluate = evaluate;
    if (metrics) o.metrics_dir = out / "metrics";
    return o;
  }
};

void check_trainers(const RunArgs& a, const PartitionBook& book) {
  if (a.trainers && a.trainers != book.trainers_per_machine) {
    throw ConfigError("--trainers " + std::to_string(a.trainers) + " does not match the partition's " +
                      std::to_string(book.trainers_per_machine) + " trainers per machine");
  }
}

void write_reports(const fs::path& out, const NodeReport& r) {
  for (const auto& t : r.trainers) {
    const std::string stem = "rank" + std::to_string(r.rank) + "_trainer" + std::to_string(t.global_rank);
    write_train_log(out / (stem + "_steps.csv"), t.log);
    std::ofstream ep(out / (stem + "_epochs.csv"));
    ep << "epoch,mean_loss,epoch_wall_s,score\n";
    std::map<std::uint64_t, std::pair<double, std::size_t>> sums;
    std::map<std::uint64_t, double> wall;
    for (const auto& s : t.log) {
      sums[s.epoch].first += s.loss;
      ++sums[s.epoch].second;
      wall[s.epoch] = s.epoch_wall_s;
    }
    for (const auto& [e, acc] : sums) {
      ep << e << ',' << acc.first / static_cast<double>(acc.second) << ',' << wall[e] << ',';
      if (e < t.epoch_scores.size()) ep << t.epoch_scores[e];
      ep << '\n';
    }
  }
  std::ofstream bytes(out / ("rank" + std::to_string(r.rank) + "_kv.csv"));
  bytes << "local_bytes,remote_bytes\n" << r.kv_local_bytes << ',' << r.kv_remote_bytes << '\n';
}

int cmd_serve(const RunArgs& a, std::uint32_t rank, const fs::path& cluster_file) {
  auto book = std::make_shared<const PartitionBook>(load_book_dir(a.part));
  check_trainers(a, *book);
  const ClusterConfig cluster = load_cluster_config(cluster_file);
  if (cluster.size() != book->num_partitions()) {
    throw ConfigError("cluster config lists " + std::to_string(cluster.size()) + " members but the partition has " +
                      std::to_string(book->num_partitions()) + " machines");
  }
  if (rank >= cluster.size()) throw ConfigError("rank " + std::to_string(rank) + " is not in the cluster config");
  const NodeRunOptions ro = a.run_options();

  NodeOptions no;
  no.rpc.host = cluster.members[rank].host;
  no.rpc.port = cluster.members[rank].port;
  no.rpc.injected_latency = std::chrono::microseconds(a.rpc_latency_us);
  NodeServer node(rank, book, load_partition(a.part, rank, *book), no);
  node.start();
  log::info("rank " + std::to_string(rank) + " serving on " + node.endpoint().str());
  node.connect(cluster.members);
  const NodeReport report = node.run(ro);
  fs::create_directories(a.out);
  write_reports(a.out, report);
  if (rank == 0 && !report.trainers.empty()) save_checkpoint(a.out / "model.ckpt", report.trainers[0].model);
  node.stop();
  return 0;
}

std::vector<pid_t> g_children;

void forward_signal(int sig) {
  for (pid_t p : g_children) ::kill(p, SIGTERM);
  ::signal(sig, SIG_DFL);
  ::raise(sig);
}

std::vector<std::uint16_t> free_ports(std::size_t n) {
  std::vector<int> fds;
  std::vector<std::uint16_t> ports;
  for (std::size_t i = 0; i < n; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = 0;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof(addr);
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      throw TransportError("cannot reserve a local port");
    }
    fds.push_back(fd);
    ports.push_back(ntohs(addr.sin_port));
  }
  for (int fd : fds) ::close(fd);
  return ports;
}

int cmd_train(const RunArgs& a, const fs::path& cluster_arg) {
  const PartitionBook book = load_book_dir(a.part);
  check_trainers(a, book);
  a.run_options();  // validate before spawning anything
  fs::create_directories(a.out);

  fs::path cluster_file = cluster_arg;
  if (cluster_file.empty()) {
    ClusterConfig cfg;
    for (std::uint16_t port : free_ports(book.num_partitions())) cfg.members.push_back({"127.0.0.1", port});
    cluster_file = a.out / "cluster.txt";
    std::ofstream(cluster_file) << cfg.str();
  }
  const ClusterConfig cluster = load_cluster_config(cluster_file);
  if (cluster.size() != book.num_partitions()) {
    throw ConfigError("cluster config lists " + std::to_string(cluster.size()) + " members but the partition has " +
                      std::to_string(book.num_partitions()) + " machines");
  }

  const std::string self = fs::read_symlink("/proc/self/exe").string();
  const auto t0 = std::chrono::steady_clock::now();
  ::signal(SIGINT, forward_signal);
  ::signal(SIGTERM, forward_signal);
  for (std::uint32_t r = 0; r < cluster.size(); ++r) {
    std::vector<std::string> args{self, "serve", "--rank", std::to_string(r), "--cluster", cluster_file.string()};
    for (auto& s : a.to_args()) args.push_back(std::move(s));
    const pid_t pid = ::fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
      std::vector<char*> argv;
      for (auto& s : args) argv.push_back(s.data());
      argv.push_back(nullptr);
      ::execv(self.c_str(), argv.data());
      std::perror("execv");
      ::_exit(127);
    }
    g_children.push_back(pid);
  }

  int failed_rank = -1;
  int failed_status = 0;
  for (std::size_t left = g_children.size(); left > 0; --left) {
    int status = 0;
    const pid_t pid = ::wait(&status);
    if (pid < 0) break;
    const auto it = std::find(g_children.begin(), g_children.end(), pid);
    const int rank = static_cast<int>(it - g_children.begin());
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (!ok && failed_rank < 0) {
      failed_rank = rank;
      failed_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      for (pid_t p : g_children) {
        if (p != pid) ::kill(p, SIGTERM);
      }
    }
  }
  g_children.clear();
  if (failed_rank >= 0) {
    std::fprintf(stderr, "error: rank %d failed with status %d\n", failed_rank, failed_status);
    return failed_status == 2 ? 2 : 1;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ifstream ep(a.out / "rank0_trainer0_epochs.csv");
  std::string line, last;
  std::getline(ep, line);
  while (std::getline(ep, line)) last = line;
  std::printf("trained %u machines x %u trainers in %.2f s; last epoch (epoch,mean_loss,wall_s,score): %s\n",
              book.num_partitions(), book.trainers_per_machine, wall, last.c_str());
  return 0;
}

// -------------------------------------------------------------- bench

struct BenchArgs {
  fs::path data;
  fs::path out = "bench.csv";
  std::uint32_t machines = 2;
  std::uint32_t trainers = 2;
  std::string fanouts = "10,5";
  std::size_t batch_size = 32;
  std::size_t max_batches = 30;
  std::int64_t rpc_latency_us = 2000;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string name;
  std::string first_level;
  std::string second_level;
  std::string pipeline;
  double epoch_s = 0;
  std::uint64_t batches = 0;
  double mean_unique = 0;
  std::uint64_t remote_bytes = 0;
  std::uint64_t local_bytes = 0;
};

BenchRow bench_one(const Dataset& d, const BenchArgs& a, std::string name, bool random_first, bool random_second,
                   bool serial) {
  PartitionOptions po;
  po.machines = a.machines;
  po.trainers_per_machine = a.trainers;
  po.seed = a.seed;
  po.random_first_level = random_first;
  po.random_second_level = random_second;
  auto book = std::make_shared<const PartitionBook>(partition_dataset(d, po));
  NodeOptions no;
  no.rpc.injected_latency = std::chrono::microseconds(a.rpc_latency_us);
  NodeRunOptions ro;
  ro.train.fanouts = parse_list(a.fanouts, "fanouts");
  ro.train.layers = static_cast<std::uint32_t>(ro.train.fanouts.size());
  ro.train.batch_size = a.batch_size;
  ro.train.seed = a.seed;
  ro.train.max_steps_per_epoch = a.max_batches;
  ro.generate_only = true;
  ro.capacities = serial ? CapacityConfig::serial() : CapacityConfig{};
  const auto reports = LocalCluster(d, book, no).run(ro);
  // Byte and vertex counts come from an inline pass over the same batches so
  // that pipeline prefetch past the last step is not counted.
  ro.reference_executor = true;
  const auto counted = LocalCluster(d, book, no).run(ro);

  BenchRow row{std::move(name), random_first ? "random" : "min-cut", random_second ? "random" : "min-cut",
               serial ? "serial" : "async"};
  double unique_sum = 0;
  std::size_t n = 0;
  for (const auto& r : reports) {
    for (const auto& t : r.trainers) {
      row.epoch_s = std::max(row.epoch_s, t.wall_s);
      row.batches += t.batches;
    }
  }
  for (const auto& r : counted) {
    row.remote_bytes += r.kv_remote_bytes;
    row.local_bytes += r.kv_local_bytes;
    for (const auto& t : r.trainers) {
      unique_sum += t.mean_input_nodes;
      ++n;
    }
  }
  row.mean_unique = n ? unique_sum / static_cast<double>(n) : 0;
  return row;
}

int cmd_bench(const BenchArgs& a) {
  const Dataset d = load_dataset_dir(a.data);
  std::vector<BenchRow> rows;
  rows.push_back(bench_one(d, a, "full", false, false, false));
  rows.push_back(bench_one(d, a, "one-level", false, true, false));
  rows.push_back(bench_one(d, a, "serial-pipeline", false, false, true));
  rows.push_back(bench_one(d, a, "random-partition", true, true, false));

  if (!a.out.parent_path().empty()) fs::create_directories(a.out.parent_path());
  std::ofstream csv(a.out);
  if (!csv) throw IoError(a.out.string(), "cannot open for writing");
  csv << "config,first_level,second_level,pipeline,epoch_time_s,batches,batches_per_s,mean_unique_vertices,"
         "remote_bytes,local_bytes\n";
  std::printf("%-18s %8s %8s %8s %10s %12s %12s\n", "config", "epoch_s", "batch/s", "unique", "remote_B",
              "local_B", "levels");
  for (const auto& r : rows) {
    const double rate = r.epoch_s > 0 ? static_cast<double>(r.batches) / r.epoch_s : 0;
    csv << r.name << ',' << r.first_level << ',' << r.second_level << ',' << r.pipeline << ',' << r.epoch_s << ','
        << r.batches << ',' << rate << ',' << r.mean_unique << ',' << r.remote_bytes << ',' << r.local_bytes << '\n';
    std::printf("%-18s %8.3f %8.1f %8.1f %10llu %12llu %s/%s\n", r.name.c_str(), r.epoch_s, rate, r.mean_unique,
                static_cast<unsigned long long>(r.remote_bytes), static_cast<unsigned long long>(r.local_bytes),
                r.first_level.c_str(), r.second_level.c_str());
  }
  return 0;
}

// ------------------------------------------------------------ inspect

int inspect_dataset(const fs::path& dir) {
  const Dataset d = load_graph(dir);
  std::printf("dataset %s\n", dir.c_str());
  std::printf("vertices %llu, edges %llu, classes %u\n", static_cast<unsigned long long>(d.graph.num_vertices()),
              static_cast<unsigned long long>(d.graph.num_edges()), d.num_classes);
  for (std::size_t t = 0; t < d.schema.num_vertex_types(); ++t) {
    std::printf("vertex type %-12s count %8llu feat_dim %u\n", d.schema.vertex_types()[t].c_str(),
                static_cast<unsigned long long>(d.vertex_counts[t]),
                d.vertex_features[t] ? d.vertex_features[t]->row_width : 0u);
  }
  for (std::size_t e = 0; e < d.schema.num_edge_types(); ++e) {
    const auto& et = d.schema.edge_types()[e];
    std::printf("edge type   %-12s %s -> %s count %llu\n", et.relation.c_str(), et.src_type.c_str(), et.dst_type.c_str(),
                static_cast<unsigned long long>(d.graph.edge_offsets().count(static_cast<TypeId>(e))));
  }
  std::uint64_t split[4] = {0, 0, 0, 0};
  for (VertexId v = 0; v < d.graph.num_vertices(); ++v) ++split[static_cast<int>(d.graph.mask(v))];
  std::printf("split train %llu val %llu test %llu none %llu\n", static_cast<unsigned long long>(split[1]),
              static_cast<unsigned long long>(split[2]), static_cast<unsigned long long>(split[3]),
              static_cast<unsigned long long>(split[0]));
  return 0;
}

int inspect_partition(const fs::path& dir) {
  const PartitionBook book = load_book(dir);
  const auto& fl = book.first_level;
  std::printf("partition %s: %u machines x %u trainers, eps %.3f%s\n", dir.c_str(), fl.k, book.trainers_per_machine,
              fl.eps_used, fl.relaxed ? " (relaxed)" : "");
  std::printf("%-8s %10s %10s %8s %12s %10s\n", "machine", "core", "halo", "halo%", "owned_edges", "train");
  for (std::uint32_t k = 0; k < fl.k; ++k) {
    const PartitionShard shard = load_partition(dir, k, book);
    const auto& p = shard.graph;
    std::uint64_t train = 0;
    for (VertexId v : p.core_vertices()) train += p.mask_of(v) == SplitMask::Train ? 1 : 0;
    const double halo = p.num_local() ? static_cast<double>(p.num_halo()) / static_cast<double>(p.num_local()) : 0;
    std::printf("%-8u %10llu %10llu %8.4f %12llu %10llu\n", k, static_cast<unsigned long long>(p.num_core),
                static_cast<unsigned long long>(p.num_halo()), halo,
                static_cast<unsigned long long>(p.num_owned_edges()), static_cast<unsigned long long>(train));
  }
  const auto& counts = book.sub_train_counts;
  const std::uint32_t tpm = book.trainers_per_machine;
  for (std::uint32_t k = 0; k < fl.k; ++k) {
    const auto first = counts.begin() + static_cast<std::ptrdiff_t>(k) * tpm;
    const double mean = static_cast<double>(std::accumulate(first, first + tpm, std::uint64_t{0})) / tpm;
    const double bound = (1.0 + book.second_eps_used[k]) * mean;
    for (std::uint32_t t = 0; t < tpm; ++t) {
      const auto c = counts[k * tpm + t];
      std::printf("trainer %u (machine %u): train %llu, %s\n", k * tpm + t, k, static_cast<unsigned long long>(c),
                  c <= bound + 1e-9 ? "within bound" : "over bound");
    }
  }
  return 0;
}

int cmd_inspect(const fs::path& path) {
  if (fs::exists(path / "book.json")) return inspect_partition(path);
  if (fs::exists(path / "schema.json")) return inspect_dataset(path);
  throw ConfigError("neither a dataset nor a partition: " + path.string());
}

int run(int argc, char** argv) {
  CLI::App app{"heteroforge: distributed heterogeneous-graph mini-batch training"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--kind", gen.kind, "planted, hetero or cliques")->check(CLI::IsMember({"planted", "hetero", "cliques"}));
  g->add_option("--vertices", gen.vertices, "Vertices (planted)");
  g->add_option("--users", gen.users, "Users (hetero)");
  g->add_option("--items", gen.items, "Items (hetero)");
  g->add_option("--categories", gen.categories, "Categories (hetero)");
  g->add_option("--clusters", gen.clusters, "Planted communities");
  g->add_option("--clique-size", gen.clique_size, "Clique size (cliques)");
  g->add_option("--p-in", gen.p_in, "Edge probability inside a community");
  g->add_option("--p-out", gen.p_out, "Edge probability across communities");
  g->add_option("--feat-dim", gen.feat_dim, "Feature width");
  g->add_option("--train-frac", gen.train_frac, "Training fraction");
  g->add_option("--val-frac", gen.val_frac, "Validation fraction");
  g->add_option("--test-frac", gen.test_frac, "Test fraction");
  g->add_flag("--bidirectional", gen.bidirectional, "Store same-type edges in both directions");
  g->add_option("--seed", gen.seed, "Seed");

  PartitionArgs part;
  auto* p = app.add_subcommand("partition", "Two-level partitioning of a dataset");
  p->add_option("--data", part.data, "Dataset directory")->required();
  p->add_option("--out", part.out, "Partition directory")->required();
  p->add_option("-k,--machines", part.machines, "Machines");
  p->add_option("-t,--trainers", part.trainers, "Trainers per machine");
  p->add_option("--eps", part.eps, "Balance tolerance");
  p->add_option("--seed", part.seed, "Seed");
  p->add_flag("--random", part.random, "Random first level");
  p->add_flag("--random-second", part.random_second, "Random second level");

  RunArgs serve_args;
  std::uint32_t rank = 0;
  fs::path serve_cluster;
  auto* s = app.add_subcommand("serve", "Run one machine of a cluster");
  serve_args.add_to(s);
  s->add_option("--rank", rank, "This machine's rank")->required();
  s->add_option("--cluster", serve_cluster, "Cluster config: one 'rank host port' line per member")->required();

  RunArgs train_args;
  fs::path train_cluster;
  auto* t = app.add_subcommand("train", "Launch every machine on this host and train");
  train_args.add_to(t);
  t->add_option("--cluster", train_cluster, "Cluster config (default: free localhost ports)");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Ablation: partitioning levels, pipeline, partitioner");
  b->add_option("--data", bench.data, "Dataset directory")->required();
  b->add_option("--out", bench.out, "CSV output");
  b->add_option("-k,--machines", bench.machines, "Machines");
  b->add_option("-t,--trainers", bench.trainers, "Trainers per machine");
  b->add_option("--fanouts", bench.fanouts, "Per-layer fanouts, input layer first");
  b->add_option("--batch-size", bench.batch_size, "Seeds per trainer per batch");
  b->add_option("--max-batches", bench.max_batches, "Batches per trainer");
  b->add_option("--rpc-latency-us", bench.rpc_latency_us, "Latency injected before every RPC handler");
  b->add_option("--seed", bench.seed, "Seed");

  fs::path inspect_path;
  auto* i = app.add_subcommand("inspect", "Describe a dataset or partition directory");
  i->add_option("path", inspect_path, "Dataset or partition directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (g->parsed()) return cmd_gen(gen);
  if (p->parsed()) return cmd_partition(part);
  if (s->parsed()) return cmd_serve(serve_args, rank, serve_cluster);
  if (t->parsed()) return cmd_train(train_args, train_cluster);
  if (b->parsed()) return cmd_bench(bench);
  if (i->parsed()) return cmd_inspect(inspect_path);
  return 2;
}

}  // namespace
}  // namespace hfg::cli

int main(int argc, char** argv) {
  hfg::log::init_from_env();
  try {
    return hfg::cli::run(argc, argv);
  } catch (const hfg::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const hfg::ArgumentError& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
