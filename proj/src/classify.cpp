#include "dialogic/classify.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "dialogic/csv.hpp"
#include "dialogic/error.hpp"
#include "dialogic/metrics.hpp"
#include "dialogic/parallel.hpp"
#include "dialogic/prompts.hpp"
#include "dialogic/random.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

using nlohmann::json;

std::string_view to_string(QuestionType t) {
  switch (t) {
    case QuestionType::How: return "How";
    case QuestionType::What: return "What";
    case QuestionType::When: return "When";
    case QuestionType::Where: return "Where";
    case QuestionType::Why: return "Why";
    case QuestionType::Who: return "Who";
    case QuestionType::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(ClassSource s) {
  return s == ClassSource::Llm ? "llm" : "rule";
}

std::optional<QuestionType> parse_question_type(std::string_view s) {
  auto strip = [](std::string_view v) {
    constexpr std::string_view junk = " \t\r\n\"'`.*:";
    const auto b = v.find_first_not_of(junk);
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = v.find_last_not_of(junk);
    return v.substr(b, e - b + 1);
  };
  std::string lower = text::to_lower(strip(s));
  constexpr std::string_view suffix = "question";
  if (lower.size() > suffix.size() && lower.ends_with(suffix)) {
    lower = std::string(strip(
        std::string_view(lower).substr(0, lower.size() - suffix.size())));
  }
  for (auto t : kQuestionTypes) {
    if (lower == text::to_lower(to_string(t))) return t;
  }
  return std::nullopt;
}

QuestionType classify_rule(std::string_view question) {
  if (text::trim(question).empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question text is empty");
  }
  const auto cut = question.find_first_of(",;");
  const std::string_view clause = question.substr(0, cut);
  std::string token;
  auto judge = [&]() -> std::optional<QuestionType> {
    if (token == "how") return QuestionType::How;
    if (token == "what") return QuestionType::What;
    if (token == "when") return QuestionType::When;
    if (token == "where") return QuestionType::Where;
    if (token == "why") return QuestionType::Why;
    if (token == "who" || token == "whom" || token == "whose") {
      return QuestionType::Who;
    }
    return std::nullopt;
  };
  for (char c : clause) {
    const auto u = static_cast<unsigned char>(c);
    if ((u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z')) {
      token.push_back(static_cast<char>(u | 0x20));
      continue;
    }
    if (auto t = judge()) return *t;
    token.clear();
  }
  if (auto t = judge()) return *t;
  return QuestionType::Other;
}

std::vector<QuestionItem> extract_questions(const Corpus& corpus,
                                            std::size_t k,
                                            SegmentStrategy strategy) {
  std::vector<std::vector<QuestionItem>> per(corpus.testimonies.size());
  parallel_for(per.size(), default_workers(), [&](std::size_t i) {
    const Testimony& t = corpus.testimonies[i];
    auto seg = segment_pairs(t, pair_qa(t), k, strategy);
    for (std::size_t p = 0; p < seg.pairs.size(); ++p) {
      const auto& pair = seg.pairs[p];
      if (!pair.has_question()) continue;
      QuestionItem q;
      q.testimony_id = t.id;
      q.pair_index = p;
      if (seg.usable()) q.segment = seg.segment_of_pair[p];
      for (std::size_t turn : pair.question_turns) {
        if (!q.text.empty()) q.text.push_back(' ');
        q.text += t.utterances[turn].text;
      }
      if (text::trim(q.text).empty()) continue;
      per[i].push_back(std::move(q));
    }
  });
  std::vector<QuestionItem> out;
  for (auto& v : per) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

std::optional<ParsedTypeReply> parse_type_reply(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    return std::nullopt;
  }
  const json j = json::parse(reply.substr(open, close - open + 1), nullptr,
                             /*allow_exceptions=*/false);
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    return std::nullopt;
  }
  const auto t = parse_question_type(j["type"].get<std::string>());
  if (!t) return std::nullopt;
  ParsedTypeReply r{*t, ""};
  if (j.contains("explanation") && j["explanation"].is_string()) {
    r.explanation = j["explanation"].get<std::string>();
  }
  return r;
}

ClassifiedQuestion classify_llm(const QuestionItem& q, Gateway& gateway,
                                const LlmSettings& settings, RunLog* log) {
  if (text::trim(q.text).empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question text is empty");
  }
  ClassifiedQuestion out{q.testimony_id, q.pair_index, q.segment, q.text,
                         QuestionType::Other, std::nullopt, ClassSource::Llm};
  const auto& tmpl = prompts::question_type();
  CompletionRequest req;
  req.model_id = settings.model_id;
  req.prompt = prompts::render(tmpl.text, {{"speaker_line", q.text}});
  req.max_output = settings.max_output;
  req.tag = "classify";
  req.prompt_version = std::string(tmpl.version);
  std::string last_reply;
  for (int round = 0; round < 2; ++round) {
    req.retry_round = round;
    last_reply = gateway.complete(req).text;
    if (auto parsed = parse_type_reply(last_reply)) {
      out.qtype = parsed->qtype;
      out.explanation = std::move(parsed->explanation);
      return out;
    }
  }
  if (log) {
    log->record("ParseFallback", {{"stage", "classify"},
                                  {"testimony_id", q.testimony_id},
                                  {"pair_index", q.pair_index},
                                  {"reply", last_reply}});
  }
  out.qtype = classify_rule(q.text);
  out.source = ClassSource::Rule;
  return out;
}

std::vector<ClassifiedQuestion> classify_all(
    const std::vector<QuestionItem>& items, Gateway* gateway,
    const LlmSettings& settings, std::size_t workers, RunLog* log) {
  std::vector<ClassifiedQuestion> out(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const auto& q = items[i];
    if (gateway) {
      out[i] = classify_llm(q, *gateway, settings, log);
    } else {
      out[i] = {q.testimony_id,       q.pair_index,  q.segment, q.text,
                classify_rule(q.text), std::nullopt, ClassSource::Rule};
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.testimony_id, a.pair_index) <
           std::tie(b.testimony_id, b.pair_index);
  });
  return out;
}

namespace {

std::size_t type_slot(QuestionType t) { return static_cast<std::size_t>(t); }

std::optional<TypeShares> shares(const std::array<std::size_t, 7>& counts,
                                 std::size_t total) {
  if (total == 0) return std::nullopt;
  TypeShares s{};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return s;
}

}  // namespace

TypeDistribution type_distribution(const std::vector<ClassifiedQuestion>& qs,
                                   std::size_t k) {
  TypeDistribution d;
  std::array<std::size_t, 7> overall{};
  std::vector<std::array<std::size_t, 7>> seg(k);
  d.segment_totals.assign(k, 0);
  for (const auto& q : qs) {
    ++overall[type_slot(q.qtype)];
    ++d.total;
    if (k > 0 && q.segment && *q.segment < k) {
      ++seg[*q.segment][type_slot(q.qtype)];
      ++d.segment_totals[*q.segment];
    }
  }
  d.overall = shares(overall, d.total);
  for (std::size_t s = 0; s < k; ++s) {
    d.per_segment.push_back(shares(seg[s], d.segment_totals[s]));
  }
  return d;
}

ValidationSample validation_sample(const std::vector<ClassifiedQuestion>& qs,
                                   std::size_t n_per_type, std::uint64_t seed) {
  ValidationSample out;
  for (auto t : kQuestionTypes) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (qs[i].qtype == t) pool.push_back(i);
    }
    const std::size_t take = std::min(n_per_type, pool.size());
    auto g = rnd::derive(seed, type_slot(t));
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + rnd::uniform_index(g, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    for (auto i : pool) out.rows.push_back(qs[i]);
    if (take < n_per_type) out.shortfalls.push_back({t, n_per_type, take});
  }
  return out;
}

std::string validation_csv(const ValidationSample& s) {
  csv::Writer w({"qtype", "testimony_id", "pair_index", "segment", "source",
                 "question", "review"});
  for (const auto& q : s.rows) {
    w.row({std::string(to_string(q.qtype)), q.testimony_id,
           std::to_string(q.pair_index),
           q.segment ? std::to_string(*q.segment) : "",
           std::string(to_string(q.source)), q.text, ""});
  }
  return w.str();
}

std::string classified_jsonl(const std::vector<ClassifiedQuestion>& qs) {
  std::string out;
  for (const auto& q : qs) {
    json j = {{"testimony_id", q.testimony_id},
              {"pair_index", q.pair_index},
              {"segment", q.segment ? json(*q.segment) : json(nullptr)},
              {"qtype", to_string(q.qtype)},
              {"source", to_string(q.source)},
              {"explanation",
               q.explanation ? json(*q.explanation) : json(nullptr)},
              {"text", q.text}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ClassifiedQuestion> classified_from_jsonl(std::string_view data) {
  std::vector<ClassifiedQuestion> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(data)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ClassifiedQuestion q;
      q.testimony_id = j.at("testimony_id").get<std::string>();
      q.pair_index = j.at("pair_index").get<std::size_t>();
      if (j.contains("segment") && !j["segment"].is_null()) {
        q.segment = j["segment"].get<std::size_t>();
      }
      const auto t = parse_question_type(j.at("qtype").get<std::string>());
      if (!t) throw Error(ErrorCode::InvalidArgument, "unknown qtype");
      q.qtype = *t;
      q.source = j.at("source").get<std::string>() == "llm" ? ClassSource::Llm
                                                           : ClassSource::Rule;
      if (j.contains("explanation") && j["explanation"].is_string()) {
        q.explanation = j["explanation"].get<std::string>();
      }
      q.text = j.value("text", "");
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("classification line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::string distribution_csv(const TypeDistribution& d) {
  std::vector<std::string> header = {"scope", "segment", "n"};
  for (auto t : kQuestionTypes) header.emplace_back(to_string(t));
  csv::Writer w(header);
  auto emit = [&](std::string scope, std::string seg, std::size_t n,
                  const std::optional<TypeShares>& s) {
    std::vector<std::string> row = {std::move(scope), std::move(seg),
                                    std::to_string(n)};
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
      row.push_back(s ? csv::real((*s)[i]) : "");
    }
    w.row(row);
  };
  emit("overall", "", d.total, d.overall);
  for (std::size_t s = 0; s < d.per_segment.size(); ++s) {
    emit("segment", std::to_string(s), d.segment_totals[s], d.per_segment[s]);
  }
  return w.str();
}

json to_json(const TypeDistribution& d) {
  auto row = [](const std::optional<TypeShares>& s) {
    if (!s) return json(nullptr);
    json j = json::object();
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
      j[std::string(to_string(kQuestionTypes[i]))] = (*s)[i];
    }
    return j;
  };
  json segs = json::array();
  for (std::size_t s = 0; s < d.per_segment.size(); ++s) {
    segs.push_back({{"n", d.segment_totals[s]}, {"shares", row(d.per_segment[s])}});
  }
  return {{"total", d.total}, {"overall", row(d.overall)}, {"segments", segs}};
}

}  // namespace dialogic
