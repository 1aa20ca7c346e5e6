#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <map>
#include <thread>

#include "hfg/error.h"
#include "hfg/pipeline.h"
#include "support.h"

namespace hfg {
namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

class PipelineTest : public ::testing::Test {
 protected:
  PipelineTest() : data_(generate_planted(testing::two_type_spec(200, 100, 6, 5))), pool_(4) {
    for (VertexId v = 0; v < data_.graph.num_vertices(); v += 3) train_.push_back(v);
  }

  TargetSource targets(std::size_t batch, std::uint64_t seed, std::vector<std::uint64_t> ids = {}) {
    auto s = std::make_shared<BatchScheduler>(ids.empty() ? train_ : ids, batch, seed);
    return [s] { return make_vertex_task(s->next()); };
  }

  SampleFn sampler(std::optional<std::uint64_t> fail_at = std::nullopt) {
    return [this, fail_at](TargetBatch t, std::function<void(std::exception_ptr, RawMiniBatch)> cb) {
      if (fail_at && t.seq_no == *fail_at) {
        cb(std::make_exception_ptr(TransportError("peer lost")), {});
        return;
      }
      cb(nullptr, sample_minibatch(data_.graph, std::move(t), plan_));
    };
  }

  std::unique_ptr<Pipeline> make(CapacityConfig caps, TargetSource ts, SampleFn sf, FeatureFn ff,
                                 bool occupancy = false) {
    PipelineOptions po;
    po.capacities = caps;
    po.plan = plan_;
    po.feat_dim = 6;
    po.record_occupancy = occupancy;
    return std::make_unique<Pipeline>(po, std::move(ts), std::move(sf), std::move(ff), pool_,
                                      data_.graph.edge_offsets());
  }

  std::unique_ptr<Pipeline> make(CapacityConfig caps, bool occupancy = false) {
    return make(caps, targets(8, 1), sampler(), dataset_features(data_), occupancy);
  }

  Dataset data_;
  PriorityWorkerPool pool_;
  FanoutPlan plan_{{4, 3}};
  std::vector<std::uint64_t> train_;
};

TEST_F(PipelineTest, StartThenStopWithoutConsuming) {
  auto p = make({25, 5, 1});
  p->start();
  std::this_thread::sleep_for(10ms);
  p->stop();
  EXPECT_THROW(p->next_minibatch(), StateError);
}

TEST_F(PipelineTest, SecondStartIsStateError) {
  auto p = make({25, 5, 1});
  p->start();
  EXPECT_THROW(p->start(), StateError);
}

TEST_F(PipelineTest, HundredCallsArriveInSeqOrder) {
  auto p = make({25, 5, 1});
  p->start();
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(p->next_minibatch().graph.seq_no, i);
}

TEST_F(PipelineTest, FeaturesEqualDirectGather) {
  auto p = make({6, 3, 1});
  p->start();
  for (int i = 0; i < 30; ++i) {
    const MiniBatch mb = p->next_minibatch();
    const auto& nodes = mb.graph.input_nodes();
    ASSERT_EQ(mb.features.size(), nodes.size() * 6);
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const auto typed = data_.graph.vertex_offsets().to_typed(nodes[r]);
      const auto row = data_.vertex_features[typed.type]->row(typed.id);
      for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(mb.features[r * 6 + j], row[j]);
    }
  }
}

TEST_F(PipelineTest, CapacitiesAreNeverExceeded) {
  auto p = make({25, 5, 1}, true);
  p->start();
  for (int i = 0; i < 80; ++i) p->next_minibatch();
  p->stop();
  EXPECT_FALSE(p->capacity_violated());
  const auto occ = p->occupancy();
  ASSERT_FALSE(occ.empty());
  for (const auto& o : occ) {
    EXPECT_LE(o.sample, 25u);
    EXPECT_LE(o.cpu, 5u);
    EXPECT_LE(o.device, 1u);
  }
  const CapacityConfig m = p->max_observed();
  EXPECT_LE(m.sample, 25u);
  EXPECT_LE(m.cpu, 5u);
  EXPECT_EQ(m.device, 1u);
}

TEST_F(PipelineTest, SeqNosRunThroughEpochBoundariesWithoutDrain) {
  const std::vector<std::uint64_t> ids(train_.begin(), train_.begin() + 20);
  auto p = make({25, 5, 1}, targets(8, 2, ids), sampler(), dataset_features(data_));
  p->start();
  std::uint64_t last_epoch = 0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const MiniBatch mb = p->next_minibatch();
    EXPECT_EQ(mb.graph.seq_no, i);
    EXPECT_EQ(mb.graph.epoch, i / 3);
    last_epoch = mb.graph.epoch;
  }
  EXPECT_EQ(last_epoch, 9u);
  p->stop();
  std::map<std::pair<std::uint64_t, StageId>, StageRecord> rec;
  for (const auto& r : p->metrics()) rec[{r.seq_no, r.stage}] = r;
  // The first batch of an epoch is sampled before the last batch of the
  // previous epoch leaves the device stage in at least one boundary.
  int overlapped = 0;
  for (std::uint64_t first = 3; first < 30; first += 3) {
    const auto a = rec.find({first, StageId::NeighborSample});
    const auto b = rec.find({first - 1, StageId::DeviceFeatureCopy});
    ASSERT_NE(a, rec.end());
    ASSERT_NE(b, rec.end());
    if (a->second.start_us < b->second.end_us) ++overlapped;
  }
  EXPECT_GT(overlapped, 0);
}

TEST_F(PipelineTest, AllOnesMatchesSerialReference) {
  for (CapacityConfig caps : {CapacityConfig::serial(), CapacityConfig{25, 5, 1}, CapacityConfig{3, 2, 1}}) {
    auto p = make(caps, targets(8, 11), sampler(), dataset_features(data_));
    SerialExecutor ref(6, targets(8, 11), sampler(), dataset_features(data_), data_.graph.edge_offsets());
    p->start();
    for (int i = 0; i < 40; ++i) EXPECT_EQ(p->next_minibatch(), ref.next_minibatch()) << caps.str() << " batch " << i;
  }
}

TEST_F(PipelineTest, FailedBatchIsReportedAndLaterOnesProceed) {
  auto p = make({25, 5, 1}, targets(8, 1), sampler(3), dataset_features(data_));
  p->start();
  for (std::uint64_t i = 0; i < 3; ++i) EXPECT_EQ(p->next_minibatch().graph.seq_no, i);
  try {
    p->next_minibatch();
    FAIL() << "expected PipelineError";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.seq_no(), 3u);
  }
  EXPECT_EQ(p->next_minibatch().graph.seq_no, 4u);
}

TEST_F(PipelineTest, SamplingContinuesWhileConsumerStalls) {
  auto p = make({6, 3, 1}, true);
  p->start();
  std::this_thread::sleep_for(300ms);
  const CapacityConfig m = p->max_observed();
  EXPECT_EQ(m.sample, 6u);
  EXPECT_EQ(m.cpu, 3u);
  EXPECT_EQ(m.device, 1u);
  EXPECT_EQ(p->next_minibatch().graph.seq_no, 0u);
}

TEST_F(PipelineTest, MoreCpuCapacityHidesPullLatency) {
  FeatureFn base = dataset_features(data_);
  FeatureFn slow = [base](std::span<const VertexId> ids, float* out, DoneFn done) {
    std::this_thread::sleep_for(5ms);
    base(ids, out, std::move(done));
  };
  auto rate = [&](std::uint32_t cpu) {
    auto p = make({25, cpu, 1}, targets(8, 4), sampler(), slow);
    p->start();
    p->next_minibatch();
    const auto t0 = Clock::now();
    for (int i = 0; i < 40; ++i) p->next_minibatch();
    return 40 / std::chrono::duration<double>(Clock::now() - t0).count();
  };
  const double one = rate(1);
  const double five = rate(5);
  EXPECT_GT(five, one * 1.5) << one << " vs " << five << " batches/s";
}

TEST_F(PipelineTest, MetricsCsvHasOneRowPerRecord) {
  auto p = make({4, 2, 1});
  p->start();
  for (int i = 0; i < 5; ++i) p->next_minibatch();
  p->stop();
  const auto dir = testing::temp_dir("pipeline_csv");
  p->write_metrics_csv(dir / "m.csv");
  std::ifstream in(dir / "m.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  EXPECT_NE(line.find("seq_no"), std::string::npos);
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, p->metrics().size());
}

TEST(CapacityConfig, ParseAndValidate) {
  EXPECT_EQ(CapacityConfig::parse("25,5,1"), (CapacityConfig{25, 5, 1}));
  EXPECT_EQ(CapacityConfig::parse("1,1,1"), CapacityConfig::serial());
  EXPECT_THROW(CapacityConfig::parse("25,5"), ArgumentError);
  EXPECT_THROW(CapacityConfig::parse("25,0,1"), ArgumentError);
  EXPECT_THROW(CapacityConfig::parse("a,b,c"), ArgumentError);
  EXPECT_EQ(CapacityConfig{}.str(), "25,5,1");
}

}  // namespace
}  // namespace hfg
