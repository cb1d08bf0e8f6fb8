#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/io.hpp"
#include "vidagents/text.hpp"

namespace vidagents {

/// Lexical resource mapping a term to its synonym set. A full thesaurus
/// (e.g. WordNet) can be plugged in by implementing this interface.
class SynonymResource {
 public:
  virtual ~SynonymResource() = default;
  /// Synset of the case-folded term, including the term itself; empty when
  /// the resource has no entry.
  virtual std::set<std::string> synset(std::string_view term) const = 0;
};

class StaticSynonymTable final : public SynonymResource {
 public:
  StaticSynonymTable() = default;

  void add(std::string_view term, const std::vector<std::string>& synonyms) {
    auto& set = table_[fold_case(term)];
    set.insert(fold_case(term));
    for (const auto& s : synonyms) set.insert(fold_case(s));
  }

  std::set<std::string> synset(std::string_view term) const override {
    auto it = table_.find(fold_case(term));
    return it == table_.end() ? std::set<std::string>{} : it->second;
  }

  std::size_t size() const noexcept { return table_.size(); }
  const std::map<std::string, std::set<std::string>>& entries() const noexcept { return table_; }

  json to_json() const {
    json j = json::object();
    for (const auto& [term, set] : table_) j[term] = set;
    return j;
  }

  static StaticSynonymTable from_json(const json& doc) {
    StaticSynonymTable table;
    try {
      for (const auto& [term, set] : doc.items()) table.add(term, set.get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, std::string("malformed synonym table: ") + e.what());
    }
    return table;
  }

  static StaticSynonymTable load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

  /// Table for the three sample domains.
  static StaticSynonymTable bundled() {
    static const std::vector<std::pair<const char*, std::vector<std::string>>> kRows = {
        // sports
        {"soccer", {"football"}},
        {"footie", {"footy", "football"}},
        {"goalkeeper", {"keeper", "goalie"}},
        {"keeper", {"goalkeeper", "goalie"}},
        {"striker", {"forward", "attacker"}},
        {"goal", {"score", "point"}},
        {"penalty", {"spot", "kick"}},
        {"stadium", {"arena", "ground"}},
        {"midfield", {"midfielder"}},
        {"racquet", {"racket"}},
        {"wimbledon", {"tennis", "grass", "slam", "championship", "tournament"}},
        {"serve", {"service"}},
        {"volley", {"shot"}},
        {"ace", {"serve"}},
        {"deuce", {"tie"}},
        {"baseline", {"line"}},
        {"hoop", {"hoops", "basket"}},
        {"nba", {"basketball", "hoops", "league"}},
        {"dunk", {"slam"}},
        {"rebound", {"recovery"}},
        {"layup", {"shot"}},
        {"playoff", {"playoffs", "postseason"}},
        {"fixture", {"match", "game"}},
        {"contest", {"match", "game", "competition"}},
        {"squad", {"team", "side"}},
        {"club", {"team", "side"}},
        {"championship", {"league", "title", "tournament"}},
        {"athletics", {"sport", "sports"}},
        {"athlete", {"player", "sportsman"}},
        {"player", {"athlete"}},
        {"coach", {"trainer", "manager"}},
        {"tournament", {"competition", "championship"}},
        {"match", {"game", "contest", "fixture"}},
        {"game", {"match", "contest"}},
        // news
        {"vote", {"ballot", "election", "poll"}},
        {"ballot", {"vote", "election"}},
        {"poll", {"vote", "survey"}},
        {"senate", {"parliament", "congress", "legislature"}},
        {"congress", {"parliament", "senate", "legislature"}},
        {"campaign", {"canvass", "election"}},
        {"president", {"leader", "head"}},
        {"policy", {"politics", "plan"}},
        {"government", {"politics", "administration", "cabinet"}},
        {"diplomacy", {"politics", "negotiation"}},
        {"stocks", {"market", "shares", "equities"}},
        {"shares", {"stocks", "equities"}},
        {"trade", {"commerce", "market"}},
        {"bank", {"finance", "lender"}},
        {"gdp", {"economy", "output"}},
        {"budget", {"finance", "spending"}},
        {"recession", {"economy", "downturn", "slump"}},
        {"economic", {"economy", "financial"}},
        {"rain", {"rainfall", "shower", "precipitation"}},
        {"temperature", {"heat", "warmth"}},
        {"wind", {"breeze", "gale"}},
        {"snow", {"snowfall", "blizzard"}},
        {"sunny", {"bright", "clear"}},
        {"hurricane", {"storm", "cyclone", "typhoon"}},
        {"meteorology", {"weather", "forecast"}},
        {"newscast", {"news", "broadcast", "bulletin"}},
        {"report", {"news", "account", "coverage"}},
        {"journalist", {"reporter", "correspondent"}},
        {"reporter", {"journalist", "correspondent"}},
        {"anchor", {"presenter", "newsreader"}},
        {"press", {"news", "media", "journalism"}},
        {"breaking", {"news", "urgent"}},
        // art
        {"brush", {"paintbrush"}},
        {"portrait", {"painting", "likeness", "picture"}},
        {"picture", {"painting", "image", "portrait"}},
        {"oil", {"oils", "painting"}},
        {"museum", {"gallery", "exhibition"}},
        {"fresco", {"mural", "painting"}},
        {"mural", {"fresco", "painting"}},
        {"sculpture", {"statue", "carving"}},
        {"symphony", {"orchestra", "concert"}},
        {"guitar", {"instrument"}},
        {"melody", {"tune", "song"}},
        {"album", {"record", "music"}},
        {"song", {"tune", "melody", "music"}},
        {"band", {"group", "orchestra"}},
        {"opera", {"music", "concert"}},
        {"jazz", {"music"}},
        {"tango", {"dance"}},
        {"dancer", {"ballerina", "performer"}},
        {"stage", {"theatre", "platform"}},
        {"salsa", {"dance"}},
        {"waltz", {"dance"}},
        {"ballerina", {"dancer", "ballet"}},
        {"choreographer", {"choreography", "dance"}},
        {"theatre", {"theater", "stage", "drama"}},
        {"exhibit", {"exhibition", "show", "display"}},
        {"artwork", {"art", "work", "piece"}},
        {"culture", {"arts", "civilization"}},
        // common
        {"clip", {"video", "footage"}},
        {"film", {"movie", "video", "footage"}},
        {"movie", {"film", "video"}},
        {"footage", {"video", "clip"}},
        {"audience", {"crowd", "spectators", "viewers"}},
        {"spectators", {"crowd", "audience"}},
        {"outside", {"outdoor", "exterior"}},
        {"inside", {"indoor", "interior"}},
        {"interview", {"speech", "conversation", "talk"}},
        {"television", {"tv", "broadcast"}},
        {"tv", {"television", "broadcast"}},
    };
    StaticSynonymTable table;
    for (const auto& [term, synonyms] : kRows) table.add(term, synonyms);
    return table;
  }

 private:
  std::map<std::string, std::set<std::string>> table_;
};

}  // namespace vidagents
