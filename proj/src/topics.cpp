#include "dialogic/topics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dialogic/csv.hpp"
#include "dialogic/error.hpp"
#include "dialogic/parallel.hpp"
#include "dialogic/prompts.hpp"
#include "dialogic/random.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(LabelSource s) {
  return s == LabelSource::Llm ? "llm" : "degraded";
}

std::string pair_text(const Testimony& t, const QAPair& pair) {
  std::string out;
  for (std::size_t i = pair.first_turn; i <= pair.last_turn; ++i) {
    const auto& u = t.utterances[i];
    if (!out.empty()) out.push_back('\n');
    switch (u.role) {
      case SpeakerRole::Interviewer: out += "INT: "; break;
      case SpeakerRole::Survivor: out += "SUBJECT: "; break;
      case SpeakerRole::Other: out += u.speaker_label + ": "; break;
    }
    out += u.text;
  }
  return out;
}

namespace {

// Trims whitespace, straight and curly quotes, and markdown emphasis.
std::string strip_decoration(std::string_view s) {
  static const std::vector<std::string_view> marks = {
      " ", "\t", "\r", "\n", "\"", "'", "*", "`", "\xE2\x80\x9C",
      "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (auto m : marks) {
      if (s.starts_with(m)) {
        s.remove_prefix(m.size());
        changed = true;
      }
      if (s.ends_with(m)) {
        s.remove_suffix(m.size());
        changed = true;
      }
    }
  }
  return std::string(s);
}

// Value of a "Name: value" line; leading markdown ("**", "#") tolerated.
std::optional<std::string> field_after(std::string_view line,
                                       std::string_view name) {
  std::string_view body = text::trim(line);
  while (!body.empty() && (body.front() == '*' || body.front() == '#')) {
    body.remove_prefix(1);
  }
  if (body.size() < name.size() + 1 ||
      text::to_lower(body.substr(0, name.size())) != name) {
    return std::nullopt;
  }
  body.remove_prefix(name.size());
  while (!body.empty() && body.front() == '*') body.remove_prefix(1);
  if (body.empty() || body.front() != ':') return std::nullopt;
  return strip_decoration(body.substr(1));
}

}  // namespace

std::optional<ParsedTitle> parse_title_reply(std::string_view reply) {
  std::optional<std::string> title, reason;
  for (auto line : text::split_lines(reply)) {
    if (!title) {
      if (auto v = field_after(line, "title")) {
        title = std::move(v);
        continue;
      }
    }
    if (!reason) {
      if (auto v = field_after(line, "reason")) reason = std::move(v);
    }
  }
  if (!title) return std::nullopt;
  auto clamped = clamp_title(*title);
  if (clamped.empty()) return std::nullopt;
  return ParsedTitle{std::move(clamped), reason.value_or("")};
}

std::string clamp_title(std::string_view title) {
  return text::first_words(title, kMaxTitleWords);
}

TopicLabel name_topic(const Testimony& t, const QAPair& pair,
                      std::size_t pair_index, Gateway& gateway,
                      const LlmSettings& settings, RunLog* log) {
  TopicLabel label{t.id, pair_index, {}, {}, LabelSource::Llm};
  const auto& tmpl = prompts::topic_naming();
  CompletionRequest req;
  req.model_id = settings.model_id;
  req.prompt = prompts::render(tmpl.text, {{"text_snippet", pair_text(t, pair)}});
  req.max_output = settings.max_output;
  req.tag = "name_topic";
  req.prompt_version = std::string(tmpl.version);
  std::string last;
  for (int round = 0; round < 2; ++round) {
    req.retry_round = round;
    last = gateway.complete(req).text;
    if (auto parsed = parse_title_reply(last)) {
      label.title = std::move(parsed->title);
      label.reason = std::move(parsed->reason);
      return label;
    }
  }
  std::string answer;
  for (auto i : pair.answer_turns) {
    if (!answer.empty()) answer.push_back(' ');
    answer += t.utterances[i].text;
  }
  if (text::word_count(answer) == 0) {
    for (auto i : pair.question_turns) {
      if (!answer.empty()) answer.push_back(' ');
      answer += t.utterances[i].text;
    }
  }
  label.title = text::first_words(answer, kDegradedTitleWords);
  if (label.title.empty()) label.title = "Untitled";
  label.source = LabelSource::Degraded;
  if (log) {
    log->record("DegradedLabel", {{"testimony_id", t.id},
                                  {"pair_index", pair_index},
                                  {"reply", last}});
  }
  return label;
}

std::string render_title_set(const std::vector<std::string>& titles,
                             std::size_t cap) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> count;
  for (const auto& t : titles) {
    if (count[t]++ == 0) order.push_back(t);
  }
  std::vector<std::size_t> keep(order.size());
  std::iota(keep.begin(), keep.end(), 0);
  if (order.size() > cap) {
    std::stable_sort(keep.begin(), keep.end(), [&](auto a, auto b) {
      return count[order[a]] > count[order[b]];
    });
    keep.resize(cap);
    std::sort(keep.begin(), keep.end());
  }
  std::string out;
  for (auto i : keep) {
    if (!out.empty()) out.push_back('\n');
    out += fmt::format("- {} (\xC3\x97{})", order[i], count[order[i]]);
  }
  return out;
}

std::string numbered_format(std::size_t n) {
  std::string out;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) out.push_back('\n');
    out += fmt::format("{}. <title>", i);
  }
  return out;
}

std::vector<std::string> parse_numbered_list(std::string_view reply) {
  std::optional<std::string> leading;  // unnumbered first line
  std::vector<std::string> items;
  long first_number = 0;
  for (auto raw : text::split_lines(reply)) {
    std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    std::size_t digits = 0;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') {
      ++digits;
    }
    const bool numbered = digits > 0 && digits < line.size() &&
                          (line[digits] == '.' || line[digits] == ')');
    if (!numbered) {
      if (items.empty() && !leading) leading = strip_decoration(line);
      continue;  // otherwise commentary between or after items
    }
    if (items.empty()) first_number = std::stol(std::string(line.substr(0, digits)));
    auto item = strip_decoration(line.substr(digits + 1));
    if (!item.empty()) items.push_back(std::move(item));
  }
  // The prompt ends with "1.", so a reply may start straight with the first
  // title and number the rest from 2.
  if (leading && !leading->empty() && (items.empty() || first_number == 2)) {
    items.insert(items.begin(), std::move(*leading));
  }
  return items;
}

bool has_conjunction(std::string_view title) {
  if (title.find('&') != std::string_view::npos) return true;
  for (const auto& w : text::alnum_tokens(title)) {
    if (w == "and" || w == "or") return true;
  }
  return false;
}

std::vector<std::string> common_topics(const std::vector<std::string>& titles,
                                       std::size_t num_topics,
                                       Gateway& gateway,
                                       const LlmSettings& settings,
                                       RunLog* log, std::size_t cap) {
  if (titles.empty()) {
    throw Error(ErrorCode::InvalidArgument, "common_topics needs titles");
  }
  if (num_topics == 0) {
    throw Error(ErrorCode::InvalidArgument, "num_topics must be at least 1");
  }
  const auto& tmpl = prompts::common_topics();
  CompletionRequest req;
  req.model_id = settings.model_id;
  req.prompt = prompts::render(
      tmpl.text, {{"title_set", render_title_set(titles, cap)},
                  {"num_topics", std::to_string(num_topics)},
                  {"output_format", numbered_format(num_topics)}});
  req.max_output = settings.max_output;
  req.tag = "common_topics";
  req.prompt_version = std::string(tmpl.version);
  std::vector<std::string> best;
  for (int round = 0; round < 2; ++round) {
    req.retry_round = round;
    const auto reply = gateway.complete(req).text;
    std::vector<std::string> accepted;
    std::set<std::string> seen;
    for (auto& item : parse_numbered_list(reply)) {
      auto title = clamp_title(item);
      if (title.empty()) continue;
      if (has_conjunction(title)) {
        if (log) log->record("RejectedTitle", {{"title", title}});
        continue;
      }
      if (!seen.insert(text::to_lower(title)).second) continue;
      accepted.push_back(std::move(title));
    }
    if (accepted.size() >= num_topics) {
      accepted.resize(num_topics);
      return accepted;
    }
    best = std::move(accepted);
  }
  throw Error(ErrorCode::InsufficientTitles,
              fmt::format("expected {} topic titles, got {} usable",
                          num_topics, best.size()));
}

double title_jaccard(std::string_view a, std::string_view b) {
  const auto wa = text::content_words(a);
  const auto wb = text::content_words(b);
  const std::set<std::string> sa(wa.begin(), wa.end());
  const std::set<std::string> sb(wb.begin(), wb.end());
  if (sa.empty() && sb.empty()) {
    return text::to_lower(text::trim(a)) == text::to_lower(text::trim(b)) ? 1.0
                                                                         : 0.0;
  }
  std::size_t common = 0;
  for (const auto& w : sa) common += sb.count(w);
  return static_cast<double>(common) /
         static_cast<double>(sa.size() + sb.size() - common);
}

TitleMatcher jaccard_matcher(double threshold) {
  return [threshold](std::string_view label, std::string_view topic) {
    return title_jaccard(label, topic) >= threshold;
  };
}

double coverage_score(const std::vector<std::string>& segment_titles,
                      std::string_view topic, const TitleMatcher& matcher) {
  if (segment_titles.empty()) {
    throw Error(ErrorCode::InvalidArgument, "coverage of an empty segment");
  }
  std::size_t hits = 0;
  for (const auto& t : segment_titles) hits += matcher(t, topic) ? 1 : 0;
  return static_cast<double>(hits) /
         static_cast<double>(segment_titles.size());
}

LabelStore::LabelStore(fs::path file) : file_(std::move(file)) {
  std::ifstream in(*file_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      TopicLabel l;
      l.testimony_id = j.at("testimony_id").get<std::string>();
      l.pair_index = j.at("pair_index").get<std::size_t>();
      l.title = j.at("title").get<std::string>();
      l.reason = j.value("reason", "");
      l.source = j.value("source", "llm") == "degraded" ? LabelSource::Degraded
                                                        : LabelSource::Llm;
      labels_[{l.testimony_id, l.pair_index,
               j.at("prompt_version").get<std::string>(),
               j.at("model_id").get<std::string>()}] = std::move(l);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::IoError, fmt::format("label store: {}", e.what()),
                  file_->string(), line_no);
    }
  }
}

std::optional<TopicLabel> LabelStore::find(const Key& key) const {
  std::lock_guard lock(mu_);
  const auto it = labels_.find(key);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

void LabelStore::put(const Key& key, const TopicLabel& label) {
  std::lock_guard lock(mu_);
  labels_[key] = label;
}

std::string LabelStore::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& [key, l] : labels_) {
    const json j = {{"testimony_id", std::get<0>(key)},
                    {"pair_index", std::get<1>(key)},
                    {"prompt_version", std::get<2>(key)},
                    {"model_id", std::get<3>(key)},
                    {"title", l.title},
                    {"reason", l.reason},
                    {"source", to_string(l.source)}};
    out += j.dump() + "\n";
  }
  return out;
}

void LabelStore::save() const {
  if (!file_) return;
  if (file_->has_parent_path()) fs::create_directories(file_->parent_path());
  const fs::path tmp = file_->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << to_jsonl();
    if (!out) {
      throw Error(ErrorCode::IoError,
                  fmt::format("cannot write label store {}", tmp.string()));
    }
  }
  fs::rename(tmp, *file_);
}

std::vector<std::string> sample_testimony_ids(const Corpus& corpus,
                                              std::size_t n,
                                              std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& t : corpus.testimonies) ids.push_back(t.id);
  std::sort(ids.begin(), ids.end());
  if (n == 0 || n >= ids.size()) return ids;
  auto g = rnd::derive(seed, 0x746f70696373ULL);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + rnd::uniform_index(g, ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, std::size_t> assign_topic_groups(
    const std::vector<SegmentTopics>& rows, double threshold) {
  std::vector<std::string> titles;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    for (const auto& c : r.topics) {
      if (index.emplace(c.title, titles.size()).second) titles.push_back(c.title);
    }
  }
  std::vector<std::size_t> parent(titles.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < titles.size(); ++i) {
    for (std::size_t j = i + 1; j < titles.size(); ++j) {
      if (title_jaccard(titles[i], titles[j]) >= threshold) {
        const auto a = root(i), b = root(j);
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::map<std::size_t, std::size_t> group_of_root;
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    const auto r = root(i);
    const auto [it, fresh] = group_of_root.emplace(r, group_of_root.size());
    out[titles[i]] = it->second;
  }
  return out;
}

TopicTable build_topic_table(const Corpus& corpus, const TopicOptions& opts,
                             Gateway& gateway, LabelStore* store,
                             RunLog* log) {
  if (opts.k == 0 || opts.top_k == 0) {
    throw Error(ErrorCode::InvalidArgument, "k and K must be at least 1");
  }
  TopicTable table;
  table.corpus_name = corpus.name;
  table.k = opts.k;
  table.top_k = opts.top_k;
  table.model_id = opts.llm.model_id;
  table.seed = opts.seed;
  table.sample_ids = sample_testimony_ids(corpus, opts.sample_size, opts.seed);

  std::map<std::string, const Testimony*> by_id;
  for (const auto& t : corpus.testimonies) by_id[t.id] = &t;

  struct Job {
    const Testimony* t;
    const QAPair* pair;
    std::size_t pair_index;
    std::size_t segment;
  };
  std::vector<std::vector<QAPair>> pairs(table.sample_ids.size());
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < table.sample_ids.size(); ++s) {
    const Testimony& t = *by_id.at(table.sample_ids[s]);
    pairs[s] = merge_short_pairs(pair_qa(t), opts.min_words);
    std::vector<SegmentView> segs;
    try {
      segs = segment_by_pairs(pairs[s], opts.k);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::KTooLarge) throw;
      if (log) log->record("SkippedTestimony", {{"testimony_id", t.id},
                                                {"pairs", pairs[s].size()}});
      continue;
    }
    for (const auto& v : segs) {
      for (std::size_t p = v.begin; p < v.end; ++p) {
        jobs.push_back({&t, &pairs[s][p], p, v.seg_index});
      }
    }
  }
  if (jobs.empty()) {
    throw Error(ErrorCode::KTooLarge,
                fmt::format("no sampled testimony has {} or more pairs", opts.k));
  }

  const std::string version(prompts::topic_naming().version);
  std::vector<TopicLabel> labels(jobs.size());
  parallel_for(jobs.size(), opts.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const LabelStore::Key key{job.t->id, job.pair_index, version,
                              opts.llm.model_id};
    if (store) {
      if (auto hit = store->find(key)) {
        labels[i] = std::move(*hit);
        return;
      }
    }
    labels[i] = name_topic(*job.t, *job.pair, job.pair_index, gateway,
                           opts.llm, log);
    if (store) store->put(key, labels[i]);
  });
  if (store) store->save();

  std::vector<std::vector<std::string>> seg_titles(opts.k);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    seg_titles[jobs[i].segment].push_back(labels[i].title);
    if (labels[i].source == LabelSource::Degraded) ++table.degraded_labels;
  }

  const auto matcher = jaccard_matcher(opts.match_threshold);
  table.rows.resize(opts.k);
  for (std::size_t s = 0; s < opts.k; ++s) {
    auto& row = table.rows[s];
    row.seg_index = s;
    row.label_count = seg_titles[s].size();
    const auto topics = common_topics(seg_titles[s], opts.top_k, gateway,
                                      opts.llm, log, opts.title_cap);
    for (const auto& title : topics) {
      row.topics.push_back(
          {title, coverage_score(seg_titles[s], title, matcher), 0});
    }
  }
  table.topic_groups = assign_topic_groups(table.rows, opts.match_threshold);
  for (auto& row : table.rows) {
    for (auto& c : row.topics) c.group = table.topic_groups.at(c.title);
  }
  return table;
}

json to_json(const TopicTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json topics = json::array();
    for (const auto& c : r.topics) {
      topics.push_back(
          {{"title", c.title}, {"coverage", c.coverage}, {"group", c.group}});
    }
    rows.push_back({{"segment", r.seg_index},
                    {"labels", r.label_count},
                    {"topics", std::move(topics)}});
  }
  return {{"corpus", t.corpus_name},
          {"k", t.k},
          {"K", t.top_k},
          {"model_id", t.model_id},
          {"prompt_versions",
           {std::string(prompts::topic_naming().version),
            std::string(prompts::common_topics().version)}},
          {"seed", t.seed},
          {"sample", t.sample_ids},
          {"degraded_labels", t.degraded_labels},
          {"rows", std::move(rows)},
          {"topic_groups", t.topic_groups}};
}

std::string topic_table_csv(const TopicTable& t) {
  csv::Writer w({"segment", "rank", "title", "coverage", "group"});
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.topics.size(); ++i) {
      const auto& c = r.topics[i];
      w.row({std::to_string(r.seg_index), std::to_string(i + 1), c.title,
             csv::real(c.coverage), std::to_string(c.group)});
    }
  }
  return w.str();
}

namespace {

constexpr std::array<std::string_view, 12> kPalette = {
    "#fbb4ae", "#b3cde3", "#ccebc5", "#decbe4", "#fed9a6", "#ffffcc",
    "#e5d8bd", "#fddaec", "#d9d9d9", "#8dd3c7", "#bebada", "#fdb462"};

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else out.push_back(c);
  }
  return out;
}

// Groups that recur in more than one cell get a color; singletons stay plain.
std::map<std::size_t, std::size_t> recurring_groups(const TopicTable& t) {
  std::map<std::size_t, std::size_t> cells;
  for (const auto& r : t.rows) {
    for (const auto& c : r.topics) ++cells[c.group];
  }
  std::map<std::size_t, std::size_t> color;
  for (const auto& [g, n] : cells) {
    if (n > 1) color.emplace(g, color.size());
  }
  return color;
}

}  // namespace

std::string topic_table_markdown(const TopicTable& t) {
  const auto color = recurring_groups(t);
  std::string out = fmt::format("# Top {} topics per segment: {}\n\n", t.top_k,
                                md_escape(t.corpus_name));
  out += "| Segment |";
  for (std::size_t i = 1; i <= t.top_k; ++i) out += fmt::format(" Topic {} |", i);
  out += "\n|---|";
  for (std::size_t i = 0; i < t.top_k; ++i) out += "---|";
  out += "\n";
  for (const auto& r : t.rows) {
    out += fmt::format("| {} |", r.seg_index + 1);
    for (const auto& c : r.topics) {
      const auto it = color.find(c.group);
      const std::string tag =
          it == color.end() ? "" : fmt::format(" [G{}]", it->second + 1);
      out += fmt::format(" {} ({:.2f}){} |", md_escape(c.title), c.coverage, tag);
    }
    out += "\n";
  }
  if (!color.empty()) {
    out += "\nRecurring groups:\n\n";
    for (const auto& [g, idx] : color) {
      std::vector<std::string> members;
      for (const auto& [title, group] : t.topic_groups) {
        if (group == g) members.push_back(md_escape(title));
      }
      out += fmt::format("- G{} ({}): {}\n", idx + 1,
                         kPalette[idx % kPalette.size()],
                         fmt::join(members, "; "));
    }
  }
  return out;
}

std::string topic_table_html(const TopicTable& t) {
  const auto color = recurring_groups(t);
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n";
  out += fmt::format("<title>Topics: {}</title>\n", html_escape(t.corpus_name));
  out +=
      "<style>table{border-collapse:collapse;font-family:sans-serif}"
      "td,th{border:1px solid #999;padding:4px 8px}"
      "td.c{text-align:left}</style>\n</head>\n<body>\n<table>\n<tr><th>Segment</th>";
  for (std::size_t i = 1; i <= t.top_k; ++i) {
    out += fmt::format("<th>Topic {}</th>", i);
  }
  out += "</tr>\n";
  for (const auto& r : t.rows) {
    out += fmt::format("<tr><td>{}</td>", r.seg_index + 1);
    for (const auto& c : r.topics) {
      const auto it = color.find(c.group);
      const std::string style =
          it == color.end()
              ? ""
              : fmt::format(" style=\"background:{}\"",
                            kPalette[it->second % kPalette.size()]);
      out += fmt::format("<td class=\"c\"{}>{} ({:.2f})</td>", style,
                         html_escape(c.title), c.coverage);
    }
    out += "</tr>\n";
  }
  out += "</table>\n</body>\n</html>\n";
  return out;
}

}  // namespace dialogic
