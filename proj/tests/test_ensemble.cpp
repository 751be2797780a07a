#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include <random>

#include "fewbit/ensemble.hpp"
#include "fewbit/inference.hpp"

using namespace fewbit;

namespace {

// Ensemble scaffold with untrained members; vote fixtures are injected via
// tally_votes, so the weights never run.
Ensemble scaffold(std::vector<int> classes, int m) {
  Ensemble ens;
  ens.classes = std::move(classes);
  ens.subset_size = m;
  for (auto& subset : enumerate_subsets(ens.classes, m)) {
    EnsembleMember member;
    member.subset = std::move(subset);
    member.arch = Architecture({2, 1}, 1);
    member.weights = WeightAssignment(member.arch);
    ens.members.push_back(std::move(member));
  }
  return ens;
}

// Applies e_{subset} = vote for the listed pairs; every pair must be set
// exactly once before use.
std::vector<std::optional<int>> votes_from_pairs(
    const Ensemble& ens, const std::vector<std::pair<std::vector<int>, int>>& pairs) {
  std::vector<std::optional<int>> votes(ens.members.size());
  for (const auto& [subset, vote] : pairs) {
    const int idx = ens.member_index(subset);
    REQUIRE(idx >= 0);
    REQUIRE(!votes[idx].has_value());
    votes[idx] = vote;
  }
  return votes;
}

// The ten-class fixture: member votes grouped as lists "class b is voted by
// the subsets {b, i} for i in ...".
std::vector<std::pair<std::vector<int>, int>> ten_class_votes() {
  const std::vector<std::pair<int, std::vector<int>>> groups = {
      {0, {1, 2, 3, 5, 7, 8}}, {1, {5, 6}},          {2, {1, 5, 8}},
      {3, {1, 2, 4, 5}},       {4, {0, 1, 2, 5, 6, 7, 9}}, {5, {6, 7}},
      {6, {0, 2, 3, 7}},       {7, {1, 2, 3}},       {8, {1, 3, 4, 5, 6, 7}},
      {9, {0, 1, 2, 3, 5, 6, 7, 8}}};
  std::vector<std::pair<std::vector<int>, int>> pairs;
  for (const auto& [b, others] : groups) {
    for (int i : others) {
      std::vector<int> subset = {b, i};
      std::ranges::sort(subset);
      pairs.push_back({subset, b});
    }
  }
  return pairs;
}

constexpr int kBird = 0, kCat = 1, kDog = 2, kFrog = 3;

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("subset enumeration sizes") {
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(enumerate_subsets(ten, 2).size() == 45);
  CHECK(enumerate_subsets({0, 1, 2, 3}, 2).size() == 6);
  CHECK(enumerate_subsets({0, 1, 2, 3}, 3).size() == 4);
  CHECK(enumerate_subsets({0, 1, 2, 3}, 4).size() == 1);
  // lexicographic order over sorted ids
  const auto subsets = enumerate_subsets({0, 1, 2}, 2);
  CHECK(subsets == std::vector<std::vector<int>>{{0, 1}, {0, 2}, {1, 2}});
  // a full ten-class one-versus-one ensemble of [784,4,4,1] members
  CHECK(45 * Architecture({784, 4, 4, 1}, 1).total_links() == 142020);
}

TEST_CASE("four-animal fixture: two dominant labels resolved by the pair net") {
  const Ensemble ens = scaffold({kBird, kCat, kDog, kFrog}, 2);
  const auto votes = votes_from_pairs(ens, {
      {{kBird, kCat}, kBird}, {{kBird, kDog}, kBird}, {{kBird, kFrog}, kFrog},
      {{kCat, kDog}, kCat},   {{kCat, kFrog}, kCat},  {{kDog, kFrog}, kDog}});
  const VoteTally tally = tally_votes(ens, votes);
  CHECK(tally.votes_for(kBird) == 2);
  CHECK(tally.votes_for(kCat) == 2);
  CHECK(tally.votes_for(kDog) == 1);
  CHECK(tally.votes_for(kFrog) == 1);
  CHECK(tally.dominant == std::vector<int>{kBird, kCat});

  CHECK(resolve(tally, ens) == kBird);
  CHECK(classify_status(tally, ens, kBird) == LabelStatus::MC);
  CHECK(classify_status(tally, ens, kCat) == LabelStatus::MIp);
  CHECK(classify_status(tally, ens, kDog) == LabelStatus::MIpp);
  CHECK(to_string(LabelStatus::MC, 2) == "2C");
  CHECK(to_string(LabelStatus::MIp, 2) == "2I'");
  CHECK(to_string(LabelStatus::MIpp, 2) == "2I''");
}

TEST_CASE("ten-class fixture: unique dominant label") {
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Ensemble ens = scaffold(ten, 2);
  const VoteTally tally = tally_votes(ens, votes_from_pairs(ens, ten_class_votes()));
  CHECK(tally.votes_for(9) == 8);
  CHECK(tally.dominant == std::vector<int>{9});
  CHECK(resolve(tally, ens) == 9);
  CHECK(classify_status(tally, ens, 9) == LabelStatus::OneC);
  CHECK(classify_status(tally, ens, 4) == LabelStatus::OneI);
}

TEST_CASE("ten-class fixture variant: three dominant labels stay unclassified") {
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Ensemble ens = scaffold(ten, 2);
  auto pairs = ten_class_votes();
  for (auto& [subset, vote] : pairs) {
    if (subset == std::vector<int>{8, 9}) vote = 8;  // {8,9} now votes 8
  }
  const VoteTally tally = tally_votes(ens, votes_from_pairs(ens, pairs));
  CHECK(tally.dominant == std::vector<int>{4, 8, 9});
  CHECK(!resolve(tally, ens).has_value());
  CHECK(classify_status(tally, ens, 4) == LabelStatus::OIp);
  CHECK(classify_status(tally, ens, 8) == LabelStatus::OIp);
  CHECK(classify_status(tally, ens, 7) == LabelStatus::OIpp);
}

TEST_CASE("ten-class fixture variant: dominant pair resolved by its net") {
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Ensemble ens = scaffold(ten, 2);
  auto pairs = ten_class_votes();
  for (auto& [subset, vote] : pairs) {
    if (subset == std::vector<int>{3, 9}) vote = 3;  // {3,9} now votes 3
  }
  const VoteTally tally = tally_votes(ens, votes_from_pairs(ens, pairs));
  CHECK(tally.dominant == std::vector<int>{4, 9});
  CHECK(resolve(tally, ens) == 4);
  CHECK(classify_status(tally, ens, 4) == LabelStatus::MC);
  CHECK(classify_status(tally, ens, 9) == LabelStatus::MIp);
  CHECK(classify_status(tally, ens, 1) == LabelStatus::MIpp);
}

TEST_CASE("a class voted by all its subsets reaches the tally bound") {
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Ensemble ens = scaffold(ten, 2);
  std::vector<std::optional<int>> votes(ens.members.size());
  for (std::size_t idx = 0; idx < ens.members.size(); ++idx) {
    const auto& subset = ens.members[idx].subset;
    votes[idx] = std::ranges::find(subset, 9) != subset.end() ? 9 : subset.front();
  }
  const VoteTally tally = tally_votes(ens, votes);
  CHECK(tally.votes_for(9) == 9);
  CHECK(tally.dominant == std::vector<int>{9});
}

TEST_CASE("random votes respect the tally bound and the tie-break identity") {
  std::mt19937_64 gen(99);
  const std::vector<int> classes = {0, 1, 2, 3, 4};
  for (int m : {2, 3}) {
    const Ensemble ens = scaffold(classes, m);
    const int bound = m == 2 ? 4 : 6;  // C(n-1, m-1) with n = 5
    for (int round = 0; round < 200; ++round) {
      std::vector<std::optional<int>> votes(ens.members.size());
      for (std::size_t idx = 0; idx < ens.members.size(); ++idx) {
        const auto& subset = ens.members[idx].subset;
        std::uniform_int_distribution<int> pick(0, m);  // m = abstain
        const int choice = pick(gen);
        if (choice < m) votes[idx] = subset[choice];
      }
      const VoteTally tally = tally_votes(ens, votes);
      for (int cls : classes) CHECK(tally.votes_for(cls) <= bound);
      const auto prediction = resolve(tally, ens);
      if (static_cast<int>(tally.dominant.size()) == m) {
        const int idx = ens.member_index(tally.dominant);
        REQUIRE(idx >= 0);
        CHECK(prediction == tally.member_votes[idx]);
      } else if (tally.dominant.size() != 1) {
        CHECK(!prediction.has_value());
      }
    }
  }
}

TEST_CASE("every vote pattern maps to exactly one status") {
  std::mt19937_64 gen(123);
  const std::vector<int> classes = {0, 1, 2, 3};
  const Ensemble ens = scaffold(classes, 2);
  for (int round = 0; round < 300; ++round) {
    std::vector<std::optional<int>> votes(ens.members.size());
    for (std::size_t idx = 0; idx < ens.members.size(); ++idx) {
      std::uniform_int_distribution<int> pick(0, 2);
      const int choice = pick(gen);
      if (choice < 2) votes[idx] = ens.members[idx].subset[choice];
    }
    const VoteTally tally = tally_votes(ens, votes);
    for (int truth : classes) {
      const LabelStatus status = classify_status(tally, ens, truth);
      const auto prediction = resolve(tally, ens);
      const bool counted_correct =
          status == LabelStatus::OneC || status == LabelStatus::MC;
      CHECK(counted_correct == (prediction.has_value() && *prediction == truth));
    }
  }
}

TEST_CASE("serialization round-trips weights and predictions") {
  std::mt19937_64 gen(2024);
  const std::vector<int> classes = {0, 1, 2};
  Ensemble ens;
  ens.classes = classes;
  ens.subset_size = 2;
  const Architecture arch({6, 3, 1}, 3);
  std::uniform_int_distribution<int> w_pick(-3, 3);
  for (auto& subset : enumerate_subsets(classes, 2)) {
    EnsembleMember member;
    member.subset = subset;
    member.arch = arch;
    member.weights = WeightAssignment(arch);
    for (int l = 1; l <= arch.depth(); ++l) {
      for (int i = 0; i < arch.layer_sizes[l - 1]; ++i) {
        for (int j = 0; j < arch.layer_sizes[l]; ++j) member.weights.set(l, i, j, w_pick(gen));
      }
    }
    member.stage_reached = "SM+MM+MW";
    member.mm_gap = 0.125;
    member.wall_time_s = 1.5;
    ens.members.push_back(std::move(member));
  }

  const std::string text = serialize_ensemble(ens);
  const Ensemble back = deserialize_ensemble(text);
  REQUIRE(back.members.size() == ens.members.size());
  for (std::size_t i = 0; i < ens.members.size(); ++i) {
    CHECK(back.members[i].weights == ens.members[i].weights);
    CHECK(back.members[i].subset == ens.members[i].subset);
  }
  CHECK(serialize_ensemble(back) == text);  // byte-stable canonical form

  std::uniform_int_distribution<int> x_pick(-5, 5);
  for (int round = 0; round < 100; ++round) {
    std::vector<double> x(6);
    for (double& v : x) v = x_pick(gen);
    const auto a = resolve(tally(x, ens), ens);
    const auto b = resolve(tally(x, back), back);
    CHECK(a == b);
  }
}

TEST_CASE("deserialization rejects foreign documents") {
  CHECK_THROWS_AS(deserialize_ensemble("{\"format\":\"other\"}"), std::invalid_argument);
}

TEST_CASE("degenerate build with m = |classes| trains a single net") {
  std::map<int, std::vector<std::vector<double>>> features;
  features[0] = {{4, 1}, {5, 2}};
  features[1] = {{-3, -2}, {-4, -1}};
  const Architecture arch({2, 2, 1}, 1);
  const Ensemble ens = build_ensemble({0, 1}, 2, features, arch, Tolerances{0.1},
                                      {15, 15, 15, true}, StagePlan::SM_MM_MW, {}, 1);
  REQUIRE(ens.members.size() == 1);
  // the single member's decode is the ensemble's prediction
  const VoteTally t = tally(std::vector<double>{4, 2}, ens);
  const auto prediction = resolve(t, ens);
  const auto direct = decode(forward(arch, ens.members[0].weights,
                                     std::vector<double>{4, 2}).output_bits(),
                             ens.members[0].encoding());
  CHECK(prediction == direct);
}

TEST_CASE("ensemble build demands usable inputs") {
  std::map<int, std::vector<std::vector<double>>> features;
  features[0] = {{1, 1}};
  features[1] = {{2, 2}};
  const Architecture arch({2, 2, 1}, 1);
  CHECK_THROWS_AS(build_ensemble({0, 1}, 1, features, arch, Tolerances{0.1},
                                 {5, 5, 5, true}, StagePlan::SM, {}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_ensemble({0, 1, 2}, 2, features, arch, Tolerances{0.1},
                                 {5, 5, 5, true}, StagePlan::SM, {}, 1),
                  std::invalid_argument);
}

}  // TEST_SUITE
