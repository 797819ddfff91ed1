#include "wildfit/evaldata.hpp"

#include <fstream>

#include <json.hpp>

using ordered_json = nlohmann::ordered_json;

namespace wildfit {

ItemRef ItemRef::parse(const std::string& s) {
    auto pos = s.rfind(':');
    if (pos == std::string::npos || pos + 1 >= s.size())
        throw DataError("malformed item ref '" + s + "' (want image_id:region_index)");
    ItemRef ref;
    ref.image_id = s.substr(0, pos);
    try {
        ref.region_index = std::stoi(s.substr(pos + 1));
    } catch (const std::exception&) {
        throw DataError("malformed item ref '" + s + "': region index is not a number");
    }
    if (ref.region_index < 0) throw DataError("item ref '" + s + "': negative region index");
    return ref;
}

std::vector<Outfit> load_outfits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open outfits file: " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("outfits parse failure in " + path + ": " + e.what());
    }
    std::vector<Outfit> out;
    for (const auto& oj : doc.at("outfits")) {
        Outfit o;
        for (const auto& item : oj.at("items")) o.items.push_back(ItemRef::parse(item.get<std::string>()));
        if (o.items.size() < 2)
            throw DataError("outfit " + std::to_string(out.size()) + " has fewer than 2 items");
        if (oj.contains("label") && !oj.at("label").is_null()) o.label = oj.at("label").get<bool>();
        out.push_back(std::move(o));
    }
    return out;
}

void save_outfits(const std::vector<Outfit>& outfits, const std::string& path) {
    ordered_json doc;
    doc["outfits"] = ordered_json::array();
    for (const auto& o : outfits) {
        ordered_json oj;
        oj["items"] = ordered_json::array();
        for (const auto& item : o.items) oj["items"].push_back(item.str());
        oj["label"] = o.label ? ordered_json(*o.label) : ordered_json(nullptr);
        doc["outfits"].push_back(std::move(oj));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write outfits file: " + path);
    out << doc.dump(2) << "\n";
}

std::vector<FitbQuestion> load_fitb_questions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open FITB file: " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("FITB parse failure in " + path + ": " + e.what());
    }
    std::vector<FitbQuestion> out;
    for (const auto& qj : doc.at("questions")) {
        FitbQuestion q;
        for (const auto& item : qj.at("query_items"))
            q.query_items.push_back(ItemRef::parse(item.get<std::string>()));
        const auto& cands = qj.at("candidates");
        if (cands.size() != 4)
            throw DataError("question " + std::to_string(out.size()) + ": want exactly 4 candidates");
        for (size_t i = 0; i < 4; ++i) q.candidates[i] = ItemRef::parse(cands[i].get<std::string>());
        q.answer_index = qj.at("answer_index").get<int>();
        if (q.answer_index < 0 || q.answer_index >= 4)
            throw DataError("question " + std::to_string(out.size()) + ": answer_index out of range");
        out.push_back(std::move(q));
    }
    return out;
}

void save_fitb_questions(const std::vector<FitbQuestion>& questions, const std::string& path) {
    ordered_json doc;
    doc["questions"] = ordered_json::array();
    for (const auto& q : questions) {
        ordered_json qj;
        qj["query_items"] = ordered_json::array();
        for (const auto& item : q.query_items) qj["query_items"].push_back(item.str());
        qj["candidates"] = ordered_json::array();
        for (const auto& c : q.candidates) qj["candidates"].push_back(c.str());
        qj["answer_index"] = q.answer_index;
        doc["questions"].push_back(std::move(qj));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write FITB file: " + path);
    out << doc.dump(2) << "\n";
}

ItemResolver::ItemResolver(const DatasetManifest& m) : manifest(m) {
    if (m.domain != Domain::source)
        throw DataError("item refs resolve against a source manifest");
    for (const auto& img : m.source_entries) by_id_[img.image_id] = &img;
}

std::pair<const RegionedImage*, int> ItemResolver::resolve(const ItemRef& ref) const {
    auto it = by_id_.find(ref.image_id);
    if (it == by_id_.end()) throw DataError("item ref '" + ref.str() + "': unknown image_id");
    if (ref.region_index >= int(it->second->regions.size()))
        throw DataError("item ref '" + ref.str() + "': region index out of range");
    return {it->second, ref.region_index};
}

std::vector<std::pair<const RegionedImage*, int>> ItemResolver::resolve(
    const std::vector<ItemRef>& refs) const {
    std::vector<std::pair<const RegionedImage*, int>> out;
    out.reserve(refs.size());
    for (const auto& r : refs) out.push_back(resolve(r));
    return out;
}

} // namespace wildfit
