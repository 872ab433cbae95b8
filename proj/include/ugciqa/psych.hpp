#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ugciqa {

// Study layout constants.
inline constexpr int kHitSizeInitial = 60;
inline constexpr int kHitSizeExtended = 210;
inline constexpr int kRepeatsPerHit = 5;
inline constexpr int kGoldsPerHit = 5;
inline constexpr double kMinAcceptanceRate = 0.75;
inline constexpr int kConsistencySplits = 25;
inline constexpr double kMinRawScore = 1.0;
inline constexpr double kMaxRawScore = 100.0;

struct RatingRecord {
  std::string subject_id;
  std::string content_id;
  double raw_score = 0.0;  // [1, 100]
  bool is_repeat = false;  // second showing of a content within the session
  bool is_gold = false;
};

struct SubjectSession {
  std::string subject_id;
  double acceptance_rate = 1.0;
  std::vector<RatingRecord> records;
};

struct MosEntry {
  double mos = 0.0;  // [0, 100]
  int rating_count = 0;
  double z_mean = 0.0;
  double z_std = 0.0;  // sample std of the content's z-scores, 0 for one rating
};

using MosTable = std::map<std::string, MosEntry>;

struct RejectionPolicy {
  double min_acceptance_rate = kMinAcceptanceRate;  // reject at or below
  double repeat_threshold = 1.0;  // multiples of the study-wide raw score std
  double max_identical_fraction = 0.5;  // reject strictly above
};

struct RejectionDecision {
  std::string subject_id;
  bool accepted = true;
  double mean_repeat_difference = 0.0;
  double identical_fraction = 0.0;
  std::vector<std::string> reasons;
};

enum class SpamMode { kNone, kConstant, kRandom };

struct RaterModel {
  double gain = 1.0;
  double bias = 0.0;
  double noise_sigma = 0.0;
  SpamMode spam_mode = SpamMode::kNone;
  double spam_constant = 50.0;
  double acceptance_rate = 0.95;
};

/// (x - mean) / sample-std. Throws kDegenerate if all values are equal.
std::vector<double> znormalize(std::span<const double> raw);

std::vector<RejectionDecision> evaluate_subjects(const std::vector<SubjectSession>& sessions,
                                                 const RejectionPolicy& policy = {});

/// Subjects that pass every rule.
std::set<std::string> reject_subjects(const std::vector<SubjectSession>& sessions,
                                      const RejectionPolicy& policy = {});

/// Z-scores are computed per accepted subject over that subject's fresh
/// ratings (repeats and golds excluded), averaged per content, and mapped
/// through clamp((z + 3) * 100 / 6, 0, 100). Throws kCoverage listing
/// contents that end up with no accepted rating.
MosTable compute_mos(const std::vector<RatingRecord>& records,
                     const std::set<std::string>& accepted);

/// Same as compute_mos but contents without an accepted rating are omitted.
MosTable compute_mos_partial(const std::vector<RatingRecord>& records,
                             const std::set<std::string>& accepted);

double lcc(std::span<const double> x, std::span<const double> y);
double srcc(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Mean LCC between the MOS of two random equal halves of the accepted
/// subjects, over n_splits seeded splits.
double inter_subject_consistency(const std::vector<RatingRecord>& records,
                                 const std::set<std::string>& accepted, int n_splits,
                                 std::uint64_t seed);

/// Gold pool used when the caller supplies none: 15 contents "gold-00".."gold-14"
/// with truths evenly spaced over [10, 90].
MosTable default_gold_pool();

/// One session per rater model. Each holds n_contents_per_hit records:
/// n-10 fresh contents sampled without replacement from true_mos, 5 repeats of
/// fresh contents placed after their first showing, and 5 golds.
/// rating = clamp(gain * truth + bias + N(0, noise_sigma), 1, 100).
std::vector<SubjectSession> simulate_raters(const MosTable& true_mos,
                                            const std::vector<RaterModel>& models,
                                            int n_contents_per_hit, std::uint64_t seed,
                                            const MosTable& gold_pool = default_gold_pool());

std::vector<RatingRecord> flatten(const std::vector<SubjectSession>& sessions);

/// Groups records by subject in first-appearance order. Acceptance rates are
/// not part of the ratings CSV and default to 1.
std::vector<SubjectSession> group_sessions(const std::vector<RatingRecord>& records);

void write_ratings_csv(std::ostream& out, const std::vector<RatingRecord>& records);
std::vector<RatingRecord> read_ratings_csv(std::istream& in);
void write_mos_csv(std::ostream& out, const MosTable& table);
MosTable read_mos_csv(std::istream& in);

}  // namespace ugciqa
