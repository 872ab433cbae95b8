#include "ugciqa/psych.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "text_util.hpp"
#include "ugciqa/error.hpp"
#include "ugciqa/rng.hpp"

namespace ugciqa {
namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::kMetric, "correlation inputs differ in length");
  if (x.size() < 3) fail(ErrorCode::kMetric, "correlation needs at least 3 items");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      fail(ErrorCode::kMetric, "correlation inputs must be finite");
  }
}

}  // namespace

std::vector<double> znormalize(std::span<const double> raw) {
  if (raw.size() < 2) fail(ErrorCode::kDegenerate, "znormalize needs at least 2 scores");
  const double m = mean_of(raw);
  const double s = sample_std(raw, m);
  if (!(s > 0.0)) fail(ErrorCode::kDegenerate, "znormalize: all scores are identical");
  std::vector<double> z(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) z[i] = (raw[i] - m) / s;
  return z;
}

std::vector<RejectionDecision> evaluate_subjects(const std::vector<SubjectSession>& sessions,
                                                 const RejectionPolicy& policy) {
  std::vector<double> all_scores;
  for (const auto& s : sessions)
    for (const auto& r : s.records) all_scores.push_back(r.raw_score);
  const double sigma_all = all_scores.size() >= 2
                               ? sample_std(all_scores, mean_of(all_scores))
                               : 0.0;

  std::vector<RejectionDecision> out;
  for (const auto& session : sessions) {
    RejectionDecision d;
    d.subject_id = session.subject_id;

    std::vector<double> diffs;
    for (std::size_t i = 0; i < session.records.size(); ++i) {
      const auto& rec = session.records[i];
      if (!rec.is_repeat) continue;
      const auto first = std::find_if(
          session.records.begin(), session.records.begin() + static_cast<long>(i),
          [&](const RatingRecord& r) { return !r.is_repeat && r.content_id == rec.content_id; });
      if (first == session.records.begin() + static_cast<long>(i))
        fail(ErrorCode::kStructure, "subject " + session.subject_id + ": repeat of " +
                                        rec.content_id + " has no earlier showing");
      diffs.push_back(std::abs(first->raw_score - rec.raw_score));
    }
    if (diffs.empty())
      fail(ErrorCode::kStructure, "subject " + session.subject_id + " has no repeat pairs");
    d.mean_repeat_difference = mean_of(diffs);

    std::map<double, int> freq;
    int mode = 0;
    for (const auto& r : session.records) mode = std::max(mode, ++freq[r.raw_score]);
    d.identical_fraction =
        static_cast<double>(mode) / static_cast<double>(session.records.size());

    if (session.acceptance_rate <= policy.min_acceptance_rate)
      d.reasons.push_back("acceptance rate " + detail::format_double(session.acceptance_rate));
    if (d.mean_repeat_difference > policy.repeat_threshold * sigma_all)
      d.reasons.push_back("repeat difference " +
                          detail::format_double(d.mean_repeat_difference) + " > " +
                          detail::format_double(policy.repeat_threshold * sigma_all));
    if (d.identical_fraction > policy.max_identical_fraction)
      d.reasons.push_back("identical scores " + detail::format_double(d.identical_fraction));
    d.accepted = d.reasons.empty();
    out.push_back(std::move(d));
  }
  return out;
}

std::set<std::string> reject_subjects(const std::vector<SubjectSession>& sessions,
                                      const RejectionPolicy& policy) {
  std::set<std::string> accepted;
  for (const auto& d : evaluate_subjects(sessions, policy))
    if (d.accepted) accepted.insert(d.subject_id);
  return accepted;
}

namespace {

// content_id -> z-scores from accepted subjects.
std::map<std::string, std::vector<double>> collect_zscores(
    const std::vector<RatingRecord>& records, const std::set<std::string>& accepted) {
  std::map<std::string, std::vector<const RatingRecord*>> by_subject;
  for (const auto& r : records) {
    if (r.is_repeat || r.is_gold) continue;
    if (accepted.count(r.subject_id) == 0) continue;
    by_subject[r.subject_id].push_back(&r);
  }
  std::map<std::string, std::vector<double>> by_content;
  for (const auto& [subject, recs] : by_subject) {
    std::vector<double> raw;
    raw.reserve(recs.size());
    for (const auto* r : recs) raw.push_back(r->raw_score);
    std::vector<double> z;
    try {
      z = znormalize(raw);
    } catch (const Error& e) {
      fail(e.code(), "subject " + subject + ": " + e.what());
    }
    for (std::size_t i = 0; i < recs.size(); ++i) by_content[recs[i]->content_id].push_back(z[i]);
  }
  return by_content;
}

MosEntry summarize(const std::vector<double>& z) {
  MosEntry e;
  e.rating_count = static_cast<int>(z.size());
  e.z_mean = mean_of(z);
  e.z_std = sample_std(z, e.z_mean);
  e.mos = std::clamp((e.z_mean + 3.0) * 100.0 / 6.0, 0.0, 100.0);
  return e;
}

}  // namespace

MosTable compute_mos_partial(const std::vector<RatingRecord>& records,
                             const std::set<std::string>& accepted) {
  MosTable table;
  for (const auto& [content, z] : collect_zscores(records, accepted))
    table[content] = summarize(z);
  return table;
}

MosTable compute_mos(const std::vector<RatingRecord>& records,
                     const std::set<std::string>& accepted) {
  MosTable table = compute_mos_partial(records, accepted);
  std::set<std::string> missing;
  for (const auto& r : records) {
    if (r.is_gold) continue;
    if (table.count(r.content_id) == 0) missing.insert(r.content_id);
  }
  if (table.empty() && missing.empty())
    fail(ErrorCode::kCoverage, "no accepted ratings");
  if (!missing.empty()) {
    std::string ids;
    for (const auto& m : missing) ids += (ids.empty() ? "" : ",") + m;
    fail(ErrorCode::kCoverage, "contents without accepted ratings: " + ids);
  }
  return table;
}

double lcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    fail(ErrorCode::kMetric, "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return lcc(rx, ry);
}

double inter_subject_consistency(const std::vector<RatingRecord>& records,
                                 const std::set<std::string>& accepted, int n_splits,
                                 std::uint64_t seed) {
  if (accepted.size() < 4)
    fail(ErrorCode::kSplit, "inter-subject consistency needs at least 4 accepted subjects");
  if (n_splits < 1) fail(ErrorCode::kSplit, "n_splits must be positive");
  const std::vector<std::string> subjects(accepted.begin(), accepted.end());
  const std::size_t half = subjects.size() / 2;

  double total = 0.0;
  for (int s = 0; s < n_splits; ++s) {
    auto order = subjects;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    rng.shuffle(order);
    const std::set<std::string> a(order.begin(), order.begin() + static_cast<long>(half));
    const std::set<std::string> b(order.begin() + static_cast<long>(half),
                                  order.begin() + static_cast<long>(2 * half));
    const MosTable ma = compute_mos_partial(records, a);
    const MosTable mb = compute_mos_partial(records, b);
    std::vector<double> xa, xb;
    for (const auto& [content, entry] : ma) {
      const auto it = mb.find(content);
      if (it == mb.end()) continue;
      xa.push_back(entry.mos);
      xb.push_back(it->second.mos);
    }
    if (xa.size() < 3)
      fail(ErrorCode::kSplit, "split " + std::to_string(s) +
                                  " leaves fewer than 3 contents rated by both halves");
    total += lcc(xa, xb);
  }
  return total / static_cast<double>(n_splits);
}

MosTable default_gold_pool() {
  MosTable pool;
  for (int i = 0; i < 15; ++i) {
    MosEntry e;
    e.mos = 10.0 + 80.0 * i / 14.0;
    e.rating_count = 1;
    pool[std::string("gold-") + (i < 10 ? "0" : "") + std::to_string(i)] = e;
  }
  return pool;
}

std::vector<SubjectSession> simulate_raters(const MosTable& true_mos,
                                            const std::vector<RaterModel>& models,
                                            int n_contents_per_hit, std::uint64_t seed,
                                            const MosTable& gold_pool) {
  const int fresh_count = n_contents_per_hit - kRepeatsPerHit - kGoldsPerHit;
  if (fresh_count < 1)
    fail(ErrorCode::kStructure, "a HIT needs at least 11 contents (5 repeats, 5 golds, 1 fresh)");
  if (static_cast<int>(true_mos.size()) < fresh_count)
    fail(ErrorCode::kStructure, "not enough contents to fill a HIT of " +
                                    std::to_string(n_contents_per_hit));
  if (static_cast<int>(gold_pool.size()) < kGoldsPerHit)
    fail(ErrorCode::kStructure, "gold pool needs at least 5 contents");

  std::vector<std::string> content_ids;
  for (const auto& [id, e] : true_mos) content_ids.push_back(id);
  std::vector<std::string> gold_ids;
  for (const auto& [id, e] : gold_pool) gold_ids.push_back(id);

  std::vector<SubjectSession> sessions;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const RaterModel& model = models[m];
    if (!(model.gain > 0.0)) fail(ErrorCode::kValidation, "rater gain must be positive");
    if (model.noise_sigma < 0.0) fail(ErrorCode::kValidation, "noise_sigma must be >= 0");
    Rng rng(derive_seed(seed, m));

    auto rate = [&](double truth) {
      switch (model.spam_mode) {
        case SpamMode::kConstant:
          return std::clamp(model.spam_constant, kMinRawScore, kMaxRawScore);
        case SpamMode::kRandom:
          return rng.uniform(kMinRawScore, kMaxRawScore);
        case SpamMode::kNone:
          break;
      }
      const double noise = model.noise_sigma > 0.0 ? rng.normal(0.0, model.noise_sigma) : 0.0;
      return std::clamp(model.gain * truth + model.bias + noise, kMinRawScore, kMaxRawScore);
    };

    auto pool = content_ids;
    rng.shuffle(pool);
    std::vector<std::string> fresh(pool.begin(), pool.begin() + fresh_count);
    auto golds = gold_ids;
    rng.shuffle(golds);
    golds.resize(kGoldsPerHit);

    struct Item {
      std::string id;
      bool gold;
    };
    std::vector<Item> order;
    for (const auto& id : fresh) order.push_back({id, false});
    for (const auto& id : golds) order.push_back({id, true});
    rng.shuffle(order);

    SubjectSession session;
    session.subject_id = "sim-" + std::to_string(m);
    session.acceptance_rate = model.acceptance_rate;
    for (const auto& item : order) {
      const double truth = item.gold ? gold_pool.at(item.id).mos : true_mos.at(item.id).mos;
      session.records.push_back({session.subject_id, item.id, rate(truth), false, item.gold});
    }

    auto repeat_pool = fresh;
    rng.shuffle(repeat_pool);
    for (int r = 0; r < kRepeatsPerHit; ++r) {
      const std::string& id = repeat_pool[static_cast<std::size_t>(r) % repeat_pool.size()];
      const auto first = std::find_if(session.records.begin(), session.records.end(),
                                      [&](const RatingRecord& rec) {
                                        return !rec.is_repeat && rec.content_id == id;
                                      });
      const auto first_idx = static_cast<std::int64_t>(first - session.records.begin());
      const auto pos = rng.uniform_int(first_idx + 1,
                                       static_cast<std::int64_t>(session.records.size()));
      session.records.insert(session.records.begin() + pos,
                             RatingRecord{session.subject_id, id, rate(true_mos.at(id).mos),
                                          true, false});
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

std::vector<RatingRecord> flatten(const std::vector<SubjectSession>& sessions) {
  std::vector<RatingRecord> out;
  for (const auto& s : sessions) out.insert(out.end(), s.records.begin(), s.records.end());
  return out;
}

std::vector<SubjectSession> group_sessions(const std::vector<RatingRecord>& records) {
  std::vector<SubjectSession> sessions;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.emplace(r.subject_id, sessions.size());
    if (inserted) sessions.push_back(SubjectSession{r.subject_id, 1.0, {}});
    sessions[it->second].records.push_back(r);
  }
  return sessions;
}

void write_ratings_csv(std::ostream& out, const std::vector<RatingRecord>& records) {
  out << "subject_id,content_id,raw_score,is_repeat,is_gold\n";
  for (const auto& r : records) {
    out << r.subject_id << ',' << r.content_id << ',' << detail::format_double(r.raw_score)
        << ',' << (r.is_repeat ? 1 : 0) << ',' << (r.is_gold ? 1 : 0) << '\n';
  }
}

std::vector<RatingRecord> read_ratings_csv(std::istream& in) {
  std::vector<RatingRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cells = detail::split(text, ',');
    if (!header) {
      if (cells.size() != 5 || detail::trim(cells[0]) != "subject_id")
        fail(ErrorCode::kValidation,
             "ratings CSV header must be subject_id,content_id,raw_score,is_repeat,is_gold");
      header = true;
      continue;
    }
    if (cells.size() != 5) fail(ErrorCode::kValidation, "ratings CSV row needs 5 cells: " + line);
    RatingRecord r;
    r.subject_id = std::string(detail::trim(cells[0]));
    r.content_id = std::string(detail::trim(cells[1]));
    r.raw_score = detail::parse_double(cells[2], "raw_score");
    r.is_repeat = detail::parse_bool(cells[3], "is_repeat");
    r.is_gold = detail::parse_bool(cells[4], "is_gold");
    if (!(r.raw_score >= kMinRawScore && r.raw_score <= kMaxRawScore))
      fail(ErrorCode::kRange, "raw_score outside [1,100]: " + line);
    out.push_back(std::move(r));
  }
  if (!header) fail(ErrorCode::kValidation, "ratings CSV is empty");
  return out;
}

void write_mos_csv(std::ostream& out, const MosTable& table) {
  out << "content_id,mos,z_mean,z_std,count\n";
  for (const auto& [id, e] : table) {
    out << id << ',' << detail::format_double(e.mos) << ',' << detail::format_double(e.z_mean)
        << ',' << detail::format_double(e.z_std) << ',' << e.rating_count << '\n';
  }
}

MosTable read_mos_csv(std::istream& in) {
  MosTable table;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cells = detail::split(text, ',');
    if (!header) {
      if (cells.empty() || detail::trim(cells[0]) != "content_id")
        fail(ErrorCode::kValidation, "MOS CSV header must start with content_id");
      header = true;
      continue;
    }
    if (cells.size() < 2) fail(ErrorCode::kValidation, "MOS CSV row needs a mos value: " + line);
    MosEntry e;
    e.mos = detail::parse_double(cells[1], "mos");
    if (cells.size() >= 5) {
      e.z_mean = detail::parse_double(cells[2], "z_mean");
      e.z_std = detail::parse_double(cells[3], "z_std");
      e.rating_count = static_cast<int>(detail::parse_int(cells[4], "count"));
    }
    table[std::string(detail::trim(cells[0]))] = e;
  }
  return table;
}

}  // namespace ugciqa
