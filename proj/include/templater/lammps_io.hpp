#pragma once

// Readers and writers for the three LAMMPS text formats the tool touches:
// data files (read), molecule templates (read/write) and fix bond/react map
// files (write). All output is '\n'-terminated ASCII and deterministic.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/text.hpp"

namespace templater {

using AtomId = int;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

/// A bonded interaction of arity N: its type id and the ordered atom ids.
template <std::size_t N>
struct Interaction {
  int type = 0;
  std::array<AtomId, N> atoms{};
  auto operator<=>(const Interaction&) const = default;
};

using Bond = Interaction<2>;
using Angle = Interaction<3>;
using Dihedral = Interaction<4>;
using Improper = Interaction<4>;

struct AtomRecord {
  AtomId id = 0;
  int molecule = 0;
  int type = 0;
  double charge = 0.0;
  Vec3 position;
  bool operator==(const AtomRecord&) const = default;
};

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const AxisRange&) const = default;
};

struct TypeCounts {
  int atom = 0;
  int bond = 0;
  int angle = 0;
  int dihedral = 0;
  int improper = 0;
  bool operator==(const TypeCounts&) const = default;
};

/// Sections that are recognised but not interpreted (force-field
/// coefficients, velocities); kept verbatim.
struct RawSection {
  std::string name;
  std::vector<std::string> lines;
  bool operator==(const RawSection&) const = default;
};

enum class AtomStyle { Full, Molecular };

struct SystemTopology {
  std::string title;
  AtomStyle style = AtomStyle::Full;
  std::vector<AtomRecord> atoms;
  std::map<int, double> masses;
  std::vector<Bond> bonds;
  std::vector<Angle> angles;
  std::vector<Dihedral> dihedrals;
  std::vector<Improper> impropers;
  std::array<AxisRange, 3> box{};
  TypeCounts type_counts;
  std::vector<RawSection> passthrough;

  bool operator==(const SystemTopology&) const = default;
};

struct TemplateAtom {
  int type = 0;
  double charge = 0.0;
  Vec3 position;
  bool operator==(const TemplateAtom&) const = default;
};

/// A LAMMPS molecule file. Atom i of `atoms` has template id i + 1.
struct MoleculeTemplateFile {
  std::string title;
  std::vector<TemplateAtom> atoms;
  std::vector<Bond> bonds;
  std::vector<Angle> angles;
  std::vector<Dihedral> dihedrals;
  std::vector<Improper> impropers;

  bool operator==(const MoleculeTemplateFile&) const = default;
};

struct ReactionMapFile {
  std::string title;
  /// (pre-template id, post-template id)
  std::vector<std::pair<AtomId, AtomId>> equivalences;
  std::array<AtomId, 2> initiators{};
  std::vector<AtomId> edge_ids;
  std::vector<AtomId> delete_ids;
  std::vector<AtomId> create_ids;
  /// Template sizes used for cross-reference checks; 0 skips the check.
  int pre_atom_count = 0;
  int post_atom_count = 0;

  bool operator==(const ReactionMapFile&) const = default;
};

namespace detail {

struct Line {
  std::size_t number;  // 1-based
  std::string_view raw;
  std::string_view content;  // comment stripped, trimmed
};

inline std::vector<Line> numbered_lines(std::string_view text) {
  std::vector<Line> out;
  const auto lines = text::split_lines(text);
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back({i + 1, lines[i], text::trim(text::strip_comment(lines[i]))});
  }
  return out;
}

inline std::string at_line(std::size_t number) { return "line " + std::to_string(number) + ": "; }

/// A named block of data lines following a section keyword.
struct Section {
  std::string name;
  std::size_t line;
  std::string_view comment;
  std::vector<Line> body;
};

/// Splits the lines after the header into sections. A section keyword is any
/// non-blank line whose first token is not numeric; `known` decides whether
/// it is accepted.
inline std::vector<Section> collect_sections(const std::vector<Line>& lines, std::size_t first,
                                             const std::set<std::string, std::less<>>& known) {
  std::vector<Section> sections;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.content.empty()) continue;
    const auto toks = text::tokens(line.content);
    if (!text::starts_numeric(toks.front())) {
      std::string name(line.content);
      if (!known.contains(name)) {
        fail(ErrorKind::UnknownSection, at_line(line.number) + "unknown section '" + name + "'");
      }
      sections.push_back({std::move(name), line.number, text::comment_of(line.raw), {}});
      continue;
    }
    if (sections.empty()) {
      fail(ErrorKind::MalformedHeader, at_line(line.number) + "data line outside of any section");
    }
    sections.back().body.push_back(line);
  }
  return sections;
}

inline void expect_count(const Section& s, long long declared) {
  if (static_cast<long long>(s.body.size()) != declared) {
    fail(ErrorKind::MalformedHeader, at_line(s.line) + "section '" + s.name + "' has " +
                                         std::to_string(s.body.size()) + " entries but the header declares " +
                                         std::to_string(declared));
  }
}

template <typename T>
T require_number(std::string_view token, const Line& line, std::string_view what) {
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = text::to_double(token)) return *v;
  } else {
    if (auto v = text::to_int<T>(token)) return *v;
  }
  fail(ErrorKind::MalformedLine,
       at_line(line.number) + "cannot parse " + std::string(what) + " from '" + std::string(token) + "'");
}

template <std::size_t N>
std::vector<Interaction<N>> parse_interactions(const Section& s) {
  std::vector<Interaction<N>> out;
  out.reserve(s.body.size());
  for (const auto& line : s.body) {
    const auto toks = text::tokens(line.content);
    if (toks.size() < N + 2) {
      fail(ErrorKind::MalformedLine, at_line(line.number) + "expected " + std::to_string(N + 2) +
                                         " fields in section '" + s.name + "'");
    }
    Interaction<N> item;
    require_number<long long>(toks[0], line, "interaction id");
    item.type = require_number<int>(toks[1], line, "interaction type");
    for (std::size_t k = 0; k < N; ++k) item.atoms[k] = require_number<int>(toks[2 + k], line, "atom id");
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        if (item.atoms[a] == item.atoms[b]) {
          fail(ErrorKind::MalformedLine, at_line(line.number) + "interaction repeats atom " +
                                             std::to_string(item.atoms[a]));
        }
      }
    }
    out.push_back(item);
  }
  return out;
}

template <std::size_t N>
void check_references(const std::vector<Interaction<N>>& items, const std::unordered_set<AtomId>& ids,
                      std::string_view section) {
  for (const auto& item : items) {
    for (const auto id : item.atoms) {
      if (!ids.contains(id)) {
        fail(ErrorKind::DanglingReference, std::string(section) + " references missing atom id " +
                                               std::to_string(id));
      }
    }
  }
}

template <std::size_t N>
void write_interactions(std::ostream& out, std::string_view name, const std::vector<Interaction<N>>& items) {
  if (items.empty()) return;
  out << '\n' << name << "\n\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out << i + 1 << ' ' << items[i].type;
    for (const auto a : items[i].atoms) out << ' ' << a;
    out << '\n';
  }
}

inline const std::set<std::string, std::less<>>& data_file_sections() {
  static const std::set<std::string, std::less<>> names = {
      "Atoms", "Velocities", "Masses", "Bonds", "Angles", "Dihedrals", "Impropers",
      "Pair Coeffs", "PairIJ Coeffs", "Bond Coeffs", "Angle Coeffs", "Dihedral Coeffs",
      "Improper Coeffs", "BondBond Coeffs", "BondAngle Coeffs", "MiddleBondTorsion Coeffs",
      "EndBondTorsion Coeffs", "AngleTorsion Coeffs", "AngleAngleTorsion Coeffs",
      "BondBond13 Coeffs", "AngleAngle Coeffs"};
  return names;
}

inline const std::set<std::string, std::less<>>& template_sections() {
  static const std::set<std::string, std::less<>> names = {
      "Coords", "Types", "Charges", "Bonds", "Angles", "Dihedrals", "Impropers",
      "Diameters", "Masses", "Molecules", "Fragments", "Special Bond Counts", "Special Bonds",
      "Shake Flags", "Shake Atoms", "Shake Bond Types"};
  return names;
}

}  // namespace detail

/// Parses a LAMMPS data file (atom style `full`, or `molecular` with zero
/// charges). Unknown sections are rejected with their line number.
inline SystemTopology parse_data_file(std::string_view text) {
  const auto lines = detail::numbered_lines(text);
  SystemTopology topo;
  if (lines.empty()) fail(ErrorKind::MalformedHeader, "empty data file");
  topo.title = std::string(text::trim(lines.front().raw));

  long long n_atoms = 0, n_bonds = 0, n_angles = 0, n_dihedrals = 0, n_impropers = 0;
  bool saw_types = false;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.content.empty()) continue;
    const auto toks = text::tokens(line.content);
    if (!text::starts_numeric(toks.front())) break;  // first section keyword

    const auto malformed = [&] {
      fail(ErrorKind::MalformedHeader, detail::at_line(line.number) + "cannot parse header line '" +
                                           std::string(line.content) + "'");
    };
    std::string keyword;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      if (text::starts_numeric(toks[k])) continue;
      for (std::size_t j = k; j < toks.size(); ++j) {
        if (!keyword.empty()) keyword += ' ';
        keyword += toks[j];
      }
      break;
    }
    const auto count = [&]() -> long long {
      const auto v = text::to_int(toks[0]);
      if (!v || *v < 0 || toks.size() < 2 || text::starts_numeric(toks[1])) malformed();
      return *v;
    };
    const auto range = [&](AxisRange& r) {
      const auto lo = text::to_double(toks[0]);
      const auto hi = toks.size() > 1 ? text::to_double(toks[1]) : std::nullopt;
      if (!lo || !hi || toks.size() != 4) malformed();
      r = {*lo, *hi};
    };
    if (keyword == "atoms") n_atoms = count();
    else if (keyword == "bonds") n_bonds = count();
    else if (keyword == "angles") n_angles = count();
    else if (keyword == "dihedrals") n_dihedrals = count();
    else if (keyword == "impropers") n_impropers = count();
    else if (keyword == "atom types") { topo.type_counts.atom = static_cast<int>(count()); saw_types = true; }
    else if (keyword == "bond types") topo.type_counts.bond = static_cast<int>(count());
    else if (keyword == "angle types") topo.type_counts.angle = static_cast<int>(count());
    else if (keyword == "dihedral types") topo.type_counts.dihedral = static_cast<int>(count());
    else if (keyword == "improper types") topo.type_counts.improper = static_cast<int>(count());
    else if (keyword == "xlo xhi") range(topo.box[0]);
    else if (keyword == "ylo yhi") range(topo.box[1]);
    else if (keyword == "zlo zhi") range(topo.box[2]);
    else if (keyword == "xy xz yz") {
      if (toks.size() != 6 || !text::to_double(toks[0]) || !text::to_double(toks[1]) || !text::to_double(toks[2]))
        malformed();
    } else if (keyword.starts_with("extra ") || keyword == "ellipsoids" || keyword == "lines" ||
               keyword == "triangles" || keyword == "bodies") {
      count();
    } else {
      malformed();
    }
  }

  const auto sections = detail::collect_sections(lines, i, detail::data_file_sections());
  std::set<std::string, std::less<>> seen;
  bool have_atoms = false, have_masses = false;
  for (const auto& s : sections) {
    if (!seen.insert(s.name).second) {
      fail(ErrorKind::MalformedHeader, detail::at_line(s.line) + "duplicate section '" + s.name + "'");
    }
    if (s.name == "Masses") {
      have_masses = true;
      if (saw_types) detail::expect_count(s, topo.type_counts.atom);
      for (const auto& line : s.body) {
        const auto toks = text::tokens(line.content);
        if (toks.size() < 2) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected 'type mass'");
        const auto type = detail::require_number<int>(toks[0], line, "atom type");
        const auto mass = detail::require_number<double>(toks[1], line, "mass");
        if (!(mass > 0.0)) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "mass must be positive");
        topo.masses[type] = mass;
      }
    } else if (s.name == "Atoms") {
      have_atoms = true;
      detail::expect_count(s, n_atoms);
      std::optional<AtomStyle> style;
      if (!s.comment.empty()) {
        const auto name = text::tokens(s.comment).front();
        if (name == "full") style = AtomStyle::Full;
        else if (name == "molecular") style = AtomStyle::Molecular;
        else fail(ErrorKind::MalformedHeader, detail::at_line(s.line) + "unsupported atom style '" +
                                                  std::string(name) + "'");
      }
      for (const auto& line : s.body) {
        const auto toks = text::tokens(line.content);
        AtomStyle row_style;
        if (style) {
          row_style = *style;
        } else if (toks.size() == 7 || toks.size() == 10) {
          row_style = AtomStyle::Full;
        } else if (toks.size() == 6 || toks.size() == 9) {
          row_style = AtomStyle::Molecular;
        } else {
          fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "cannot infer atom style from " +
                                             std::to_string(toks.size()) + " columns");
        }
        if (!style) style = row_style;
        const std::size_t need = row_style == AtomStyle::Full ? 7 : 6;
        if (toks.size() != need && toks.size() != need + 3) {
          fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected " + std::to_string(need) +
                                             " columns in Atoms");
        }
        AtomRecord atom;
        atom.id = detail::require_number<int>(toks[0], line, "atom id");
        atom.molecule = detail::require_number<int>(toks[1], line, "molecule id");
        atom.type = detail::require_number<int>(toks[2], line, "atom type");
        std::size_t k = 3;
        if (row_style == AtomStyle::Full) atom.charge = detail::require_number<double>(toks[k++], line, "charge");
        atom.position.x = detail::require_number<double>(toks[k++], line, "x");
        atom.position.y = detail::require_number<double>(toks[k++], line, "y");
        atom.position.z = detail::require_number<double>(toks[k++], line, "z");
        if (atom.id <= 0) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "atom ids must be positive");
        topo.atoms.push_back(atom);
      }
      topo.style = style.value_or(AtomStyle::Full);
    } else if (s.name == "Bonds") {
      detail::expect_count(s, n_bonds);
      topo.bonds = detail::parse_interactions<2>(s);
    } else if (s.name == "Angles") {
      detail::expect_count(s, n_angles);
      topo.angles = detail::parse_interactions<3>(s);
    } else if (s.name == "Dihedrals") {
      detail::expect_count(s, n_dihedrals);
      topo.dihedrals = detail::parse_interactions<4>(s);
    } else if (s.name == "Impropers") {
      detail::expect_count(s, n_impropers);
      topo.impropers = detail::parse_interactions<4>(s);
    } else {
      RawSection raw{s.name, {}};
      for (const auto& line : s.body) raw.lines.emplace_back(text::trim(line.raw));
      topo.passthrough.push_back(std::move(raw));
    }
  }

  const auto missing = [](long long declared, bool present, const char* name) {
    if (declared > 0 && !present) {
      fail(ErrorKind::MalformedHeader, std::string("header declares ") + std::to_string(declared) + ' ' + name +
                                           " but the section is missing");
    }
  };
  missing(n_atoms, have_atoms, "atoms");
  missing(n_bonds, seen.contains("Bonds"), "bonds");
  missing(n_angles, seen.contains("Angles"), "angles");
  missing(n_dihedrals, seen.contains("Dihedrals"), "dihedrals");
  missing(n_impropers, seen.contains("Impropers"), "impropers");
  if (!have_masses && !topo.atoms.empty()) fail(ErrorKind::MissingMass, "data file has no Masses section");

  std::unordered_set<AtomId> ids;
  for (const auto& atom : topo.atoms) {
    if (!ids.insert(atom.id).second) {
      fail(ErrorKind::MalformedLine, "duplicate atom id " + std::to_string(atom.id));
    }
    if (!topo.masses.contains(atom.type)) {
      fail(ErrorKind::MissingMass, "atom " + std::to_string(atom.id) + " has type " + std::to_string(atom.type) +
                                       " without a mass entry");
    }
  }
  detail::check_references(topo.bonds, ids, "Bonds");
  detail::check_references(topo.angles, ids, "Angles");
  detail::check_references(topo.dihedrals, ids, "Dihedrals");
  detail::check_references(topo.impropers, ids, "Impropers");
  return topo;
}

/// Writes a SystemTopology back out as a data file (atom style full).
inline std::string write_data_file(const SystemTopology& topo) {
  std::ostringstream out;
  out << (topo.title.empty() ? std::string("LAMMPS data file") : topo.title) << "\n\n";
  out << topo.atoms.size() << " atoms\n";
  out << topo.bonds.size() << " bonds\n";
  out << topo.angles.size() << " angles\n";
  out << topo.dihedrals.size() << " dihedrals\n";
  out << topo.impropers.size() << " impropers\n\n";
  const int atom_types = std::max<int>(topo.type_counts.atom, static_cast<int>(topo.masses.size()));
  out << atom_types << " atom types\n";
  out << topo.type_counts.bond << " bond types\n";
  out << topo.type_counts.angle << " angle types\n";
  out << topo.type_counts.dihedral << " dihedral types\n";
  out << topo.type_counts.improper << " improper types\n\n";
  const char* axes[] = {"xlo xhi", "ylo yhi", "zlo zhi"};
  for (int a = 0; a < 3; ++a) {
    out << text::fixed6(topo.box[a].lo) << ' ' << text::fixed6(topo.box[a].hi) << ' ' << axes[a] << '\n';
  }
  out << "\nMasses\n\n";
  for (const auto& [type, mass] : topo.masses) out << type << ' ' << text::fixed6(mass) << '\n';
  out << "\nAtoms # full\n\n";
  for (const auto& a : topo.atoms) {
    out << a.id << ' ' << a.molecule << ' ' << a.type << ' ' << text::fixed6(a.charge) << ' '
        << text::fixed6(a.position.x) << ' ' << text::fixed6(a.position.y) << ' ' << text::fixed6(a.position.z)
        << '\n';
  }
  detail::write_interactions(out, "Bonds", topo.bonds);
  detail::write_interactions(out, "Angles", topo.angles);
  detail::write_interactions(out, "Dihedrals", topo.dihedrals);
  detail::write_interactions(out, "Impropers", topo.impropers);
  return out.str();
}

/// Throws InvalidTemplate unless every interaction references atoms 1..N.
inline void validate(const MoleculeTemplateFile& t) {
  const auto n = static_cast<AtomId>(t.atoms.size());
  const auto check = [n](const auto& items, const char* name) {
    for (const auto& item : items) {
      for (const auto a : item.atoms) {
        if (a < 1 || a > n) {
          fail(ErrorKind::InvalidTemplate, std::string(name) + " references atom " + std::to_string(a) +
                                               " outside 1.." + std::to_string(n));
        }
      }
    }
  };
  check(t.bonds, "Bonds");
  check(t.angles, "Angles");
  check(t.dihedrals, "Dihedrals");
  check(t.impropers, "Impropers");
}

inline std::string write_molecule_template(const MoleculeTemplateFile& t) {
  validate(t);
  std::ostringstream out;
  std::string title = t.title.empty() ? std::string("# LAMMPS molecule template") : t.title;
  std::replace(title.begin(), title.end(), '\n', ' ');
  out << title << "\n\n";
  out << t.atoms.size() << " atoms\n";
  if (!t.bonds.empty()) out << t.bonds.size() << " bonds\n";
  if (!t.angles.empty()) out << t.angles.size() << " angles\n";
  if (!t.dihedrals.empty()) out << t.dihedrals.size() << " dihedrals\n";
  if (!t.impropers.empty()) out << t.impropers.size() << " impropers\n";
  if (!t.atoms.empty()) {
    out << "\nCoords\n\n";
    for (std::size_t i = 0; i < t.atoms.size(); ++i) {
      const auto& p = t.atoms[i].position;
      out << i + 1 << ' ' << text::fixed6(p.x) << ' ' << text::fixed6(p.y) << ' ' << text::fixed6(p.z) << '\n';
    }
    out << "\nTypes\n\n";
    for (std::size_t i = 0; i < t.atoms.size(); ++i) out << i + 1 << ' ' << t.atoms[i].type << '\n';
    out << "\nCharges\n\n";
    for (std::size_t i = 0; i < t.atoms.size(); ++i) out << i + 1 << ' ' << text::fixed6(t.atoms[i].charge) << '\n';
  }
  detail::write_interactions(out, "Bonds", t.bonds);
  detail::write_interactions(out, "Angles", t.angles);
  detail::write_interactions(out, "Dihedrals", t.dihedrals);
  detail::write_interactions(out, "Impropers", t.impropers);
  return out.str();
}

inline MoleculeTemplateFile parse_molecule_template(std::string_view text) {
  const auto lines = detail::numbered_lines(text);
  if (lines.empty()) fail(ErrorKind::MalformedHeader, "empty molecule template");
  MoleculeTemplateFile t;
  t.title = std::string(text::trim(lines.front().raw));

  long long n_atoms = -1, n_bonds = 0, n_angles = 0, n_dihedrals = 0, n_impropers = 0;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.content.empty()) continue;
    const auto toks = text::tokens(line.content);
    if (!text::starts_numeric(toks.front())) break;
    const auto malformed = [&] {
      fail(ErrorKind::MalformedHeader, detail::at_line(line.number) + "cannot parse header line '" +
                                           std::string(line.content) + "'");
    };
    const auto& keyword = toks.back();
    if (keyword == "mass" || keyword == "com" || keyword == "inertia" || keyword == "fragments") {
      continue;
    }
    const auto v = text::to_int(toks[0]);
    if (!v || *v < 0 || toks.size() != 2) malformed();
    if (keyword == "atoms") n_atoms = *v;
    else if (keyword == "bonds") n_bonds = *v;
    else if (keyword == "angles") n_angles = *v;
    else if (keyword == "dihedrals") n_dihedrals = *v;
    else if (keyword == "impropers") n_impropers = *v;
    else malformed();
  }
  if (n_atoms < 0) fail(ErrorKind::MalformedHeader, "molecule template does not declare an atom count");
  t.atoms.resize(static_cast<std::size_t>(n_atoms));

  const auto sections = detail::collect_sections(lines, i, detail::template_sections());
  std::set<std::string, std::less<>> seen;
  const auto per_atom = [&](const detail::Section& s, auto&& assign) {
    detail::expect_count(s, n_atoms);
    std::vector<bool> filled(t.atoms.size(), false);
    for (const auto& line : s.body) {
      const auto toks = text::tokens(line.content);
      const auto id = detail::require_number<long long>(toks[0], line, "atom id");
      if (id < 1 || id > n_atoms || filled[static_cast<std::size_t>(id - 1)]) {
        fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "atom id " + std::to_string(id) +
                                           " out of range or repeated in '" + s.name + "'");
      }
      filled[static_cast<std::size_t>(id - 1)] = true;
      assign(t.atoms[static_cast<std::size_t>(id - 1)], toks, line);
    }
  };
  for (const auto& s : sections) {
    if (!seen.insert(s.name).second) {
      fail(ErrorKind::MalformedHeader, detail::at_line(s.line) + "duplicate section '" + s.name + "'");
    }
    if (s.name == "Coords") {
      per_atom(s, [](TemplateAtom& a, const auto& toks, const detail::Line& line) {
        if (toks.size() != 4) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected 'id x y z'");
        a.position = {detail::require_number<double>(toks[1], line, "x"),
                      detail::require_number<double>(toks[2], line, "y"),
                      detail::require_number<double>(toks[3], line, "z")};
      });
    } else if (s.name == "Types") {
      per_atom(s, [](TemplateAtom& a, const auto& toks, const detail::Line& line) {
        if (toks.size() != 2) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected 'id type'");
        a.type = detail::require_number<int>(toks[1], line, "atom type");
      });
    } else if (s.name == "Charges") {
      per_atom(s, [](TemplateAtom& a, const auto& toks, const detail::Line& line) {
        if (toks.size() != 2) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected 'id charge'");
        a.charge = detail::require_number<double>(toks[1], line, "charge");
      });
    } else if (s.name == "Bonds") {
      detail::expect_count(s, n_bonds);
      t.bonds = detail::parse_interactions<2>(s);
    } else if (s.name == "Angles") {
      detail::expect_count(s, n_angles);
      t.angles = detail::parse_interactions<3>(s);
    } else if (s.name == "Dihedrals") {
      detail::expect_count(s, n_dihedrals);
      t.dihedrals = detail::parse_interactions<4>(s);
    } else if (s.name == "Impropers") {
      detail::expect_count(s, n_impropers);
      t.impropers = detail::parse_interactions<4>(s);
    }
  }
  if (n_atoms > 0 && !seen.contains("Types")) fail(ErrorKind::MalformedHeader, "molecule template has no Types section");
  const auto missing = [&](long long declared, const char* name) {
    if (declared > 0 && !seen.contains(name)) {
      fail(ErrorKind::MalformedHeader, std::string("header declares ") + name + " but the section is missing");
    }
  };
  missing(n_bonds, "Bonds");
  missing(n_angles, "Angles");
  missing(n_dihedrals, "Dihedrals");
  missing(n_impropers, "Impropers");

  const auto dangling = [&](const auto& items, const char* name) {
    for (const auto& item : items) {
      for (const auto a : item.atoms) {
        if (a < 1 || a > n_atoms) {
          fail(ErrorKind::DanglingReference, std::string(name) + " references missing atom id " + std::to_string(a));
        }
      }
    }
  };
  dangling(t.bonds, "Bonds");
  dangling(t.angles, "Angles");
  dangling(t.dihedrals, "Dihedrals");
  dangling(t.impropers, "Impropers");
  return t;
}

/// Checks the map-file invariants; throws InvalidTemplate on violation.
inline void validate(const ReactionMapFile& m) {
  const auto bad = [](const std::string& what) { fail(ErrorKind::InvalidTemplate, "map file: " + what); };
  std::set<AtomId> pre, post;
  for (const auto& [a, b] : m.equivalences) {
    if (a < 1 || b < 1) bad("non-positive template id in equivalences");
    if (!pre.insert(a).second) bad("pre-template atom " + std::to_string(a) + " appears twice");
    if (!post.insert(b).second) bad("post-template atom " + std::to_string(b) + " appears twice");
  }
  for (const auto id : m.initiators) {
    if (!pre.contains(id)) bad("initiator " + std::to_string(id) + " is not in the equivalences");
  }
  if (m.initiators[0] == m.initiators[1]) bad("initiators must be distinct");
  for (const auto id : m.delete_ids) {
    if (pre.contains(id)) bad("deleted atom " + std::to_string(id) + " also has an equivalence");
    if (m.pre_atom_count > 0 && (id < 1 || id > m.pre_atom_count)) bad("deleted atom out of range");
  }
  for (const auto id : m.create_ids) {
    if (post.contains(id)) bad("created atom " + std::to_string(id) + " also has an equivalence");
    if (m.post_atom_count > 0 && (id < 1 || id > m.post_atom_count)) {
      bad("created atom " + std::to_string(id) + " does not exist in the post-reaction template");
    }
  }
  for (const auto id : m.edge_ids) {
    if (m.pre_atom_count > 0 && (id < 1 || id > m.pre_atom_count)) bad("edge atom out of range");
  }
  if (m.pre_atom_count > 0 &&
      pre.size() + m.delete_ids.size() != static_cast<std::size_t>(m.pre_atom_count)) {
    bad("equivalences and deleted atoms do not cover the pre-reaction template");
  }
  if (m.post_atom_count > 0 &&
      post.size() + m.create_ids.size() != static_cast<std::size_t>(m.post_atom_count)) {
    bad("equivalences and created atoms do not cover the post-reaction template");
  }
  if (!pre.empty() && m.pre_atom_count > 0 && *pre.rbegin() > m.pre_atom_count) bad("equivalence out of range");
  if (!post.empty() && m.post_atom_count > 0 && *post.rbegin() > m.post_atom_count) bad("equivalence out of range");
}

inline std::string write_map_file(const ReactionMapFile& m) {
  validate(m);
  auto sorted = [](std::vector<AtomId> ids) {
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  auto equivalences = m.equivalences;
  std::sort(equivalences.begin(), equivalences.end());

  std::ostringstream out;
  std::string title = m.title.empty() ? std::string("# fix bond/react map file") : m.title;
  std::replace(title.begin(), title.end(), '\n', ' ');
  out << title << "\n\n";
  out << equivalences.size() << " equivalences\n";
  out << m.edge_ids.size() << " edgeIDs\n";
  if (!m.delete_ids.empty()) out << m.delete_ids.size() << " deleteIDs\n";
  if (!m.create_ids.empty()) out << m.create_ids.size() << " createIDs\n";
  out << "\nInitiatorIDs\n\n" << m.initiators[0] << '\n' << m.initiators[1] << '\n';
  const auto id_section = [&out](const char* name, const std::vector<AtomId>& ids) {
    if (ids.empty()) return;
    out << '\n' << name << "\n\n";
    for (const auto id : ids) out << id << '\n';
  };
  id_section("EdgeIDs", sorted(m.edge_ids));
  id_section("DeleteIDs", sorted(m.delete_ids));
  id_section("CreateIDs", sorted(m.create_ids));
  out << "\nEquivalences\n\n";
  for (const auto& [pre, post] : equivalences) out << pre << ' ' << post << '\n';
  return out.str();
}

/// Reads back a map file written by write_map_file (template sizes are not
/// recorded in the format and stay 0).
inline ReactionMapFile parse_map_file(std::string_view text) {
  const auto lines = detail::numbered_lines(text);
  if (lines.empty()) fail(ErrorKind::MalformedHeader, "empty map file");
  ReactionMapFile m;
  m.title = std::string(text::trim(lines.front().raw));
  std::size_t i = 1;
  std::map<std::string, long long, std::less<>> counts;
  for (; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.content.empty()) continue;
    const auto toks = text::tokens(line.content);
    if (!text::starts_numeric(toks.front())) break;
    const auto v = text::to_int(toks[0]);
    if (!v || toks.size() != 2) {
      fail(ErrorKind::MalformedHeader, detail::at_line(line.number) + "cannot parse header line");
    }
    counts[std::string(toks[1])] = *v;
  }
  static const std::set<std::string, std::less<>> known = {"InitiatorIDs", "EdgeIDs", "DeleteIDs", "CreateIDs",
                                                           "Equivalences", "BondingIDs"};
  const auto sections = detail::collect_sections(lines, i, known);
  const auto ids = [](const detail::Section& s) {
    std::vector<AtomId> out;
    for (const auto& line : s.body) out.push_back(detail::require_number<int>(text::tokens(line.content)[0], line, "id"));
    return out;
  };
  for (const auto& s : sections) {
    if (s.name == "InitiatorIDs" || s.name == "BondingIDs") {
      const auto v = ids(s);
      if (v.size() != 2) fail(ErrorKind::MalformedLine, detail::at_line(s.line) + "expected two initiator ids");
      m.initiators = {v[0], v[1]};
    } else if (s.name == "EdgeIDs") {
      detail::expect_count(s, counts["edgeIDs"]);
      m.edge_ids = ids(s);
    } else if (s.name == "DeleteIDs") {
      detail::expect_count(s, counts["deleteIDs"]);
      m.delete_ids = ids(s);
    } else if (s.name == "CreateIDs") {
      detail::expect_count(s, counts["createIDs"]);
      m.create_ids = ids(s);
    } else if (s.name == "Equivalences") {
      detail::expect_count(s, counts["equivalences"]);
      for (const auto& line : s.body) {
        const auto toks = text::tokens(line.content);
        if (toks.size() != 2) fail(ErrorKind::MalformedLine, detail::at_line(line.number) + "expected 'pre post'");
        m.equivalences.emplace_back(detail::require_number<int>(toks[0], line, "pre id"),
                                    detail::require_number<int>(toks[1], line, "post id"));
      }
    }
  }
  return m;
}

}  // namespace templater
