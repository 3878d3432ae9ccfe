#include "mexp/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mexp {

namespace {

constexpr const char* kMagic = "MEXPGRID 1";

nlohmann::json axis_json(const Axis& a) { return {{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; }

Axis axis_from(const nlohmann::json& j) {
    Axis a{j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("n").get<int>()};
    if (a.n < 2 || !(a.hi > a.lo)) throw ContainerError("container: malformed axis");
    return a;
}

void put_le(std::ofstream& out, const std::vector<double>& data) {
    std::vector<unsigned char> buf(data.size() * 8);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
        for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void get_le(std::ifstream& in, std::vector<double>& data) {
    std::vector<unsigned char> buf(data.size() * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ContainerError("container: truncated payload");
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
        data[i] = std::bit_cast<double>(bits);
    }
}

}  // namespace

const NodeField& Container::array(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ContainerError("container: no array named '" + name + "'");
    return it->second;
}

void write_container(const std::string& path, const GridAxes& axes, const std::string& params_hash,
                     const nlohmann::json& settings,
                     const std::vector<std::pair<std::string, const NodeField*>>& arrays) {
    nlohmann::json h;
    h["dims"] = {axes.t.n, axes.w.n, axes.p.n};
    h["axes"] = {{"t", axis_json(axes.t)}, {"w", axis_json(axes.w)}, {"p", axis_json(axes.p)}};
    h["params_hash"] = params_hash;
    h["settings"] = settings;
    h["order"] = "t,w,p";
    h["dtype"] = "float64-le";
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, field] : arrays) {
        if (field->data().size() != axes.size()) throw ContainerError("container: array '" + name + "' has wrong size");
        names.push_back(name);
    }
    h["arrays"] = names;
    const std::string header = h.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError("container: cannot write '" + path + "'");
    out << kMagic << '\n' << header.size() << '\n' << header;
    for (const auto& [name, field] : arrays) put_le(out, field->data());
    if (!out) throw ContainerError("container: write failed for '" + path + "'");
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError("container: cannot open '" + path + "'");
    std::string magic, len_line;
    std::getline(in, magic);
    if (magic != kMagic) throw ContainerError("container: '" + path + "' is not a grid container");
    std::getline(in, len_line);
    std::size_t len = 0;
    try {
        len = std::stoull(len_line);
    } catch (const std::exception&) {
        throw ContainerError("container: bad header length");
    }
    if (len > (1u << 26)) throw ContainerError("container: header too large");
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len)) throw ContainerError("container: truncated header");

    Container c;
    try {
        const auto h = nlohmann::json::parse(header);
        c.axes = GridAxes{axis_from(h.at("axes").at("t")), axis_from(h.at("axes").at("w")), axis_from(h.at("axes").at("p"))};
        c.params_hash = h.at("params_hash").get<std::string>();
        c.settings = h.value("settings", nlohmann::json::object());
        for (const auto& n : h.at("arrays")) c.order.push_back(n.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(std::string("container: malformed header: ") + e.what());
    }
    for (const auto& name : c.order) {
        NodeField f(c.axes);
        get_le(in, f.data());
        c.arrays.emplace(name, std::move(f));
    }
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace mexp
