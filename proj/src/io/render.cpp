#include "eqa/io/render.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "eqa/errors.hpp"
#include "eqa/path_oracle.hpp"

namespace eqa::io {

namespace {

std::vector<AgentState> visited(const RenderEpisode& ep) {
  if (!ep.env) throw PreconditionError("render: no environment");
  return replay(*ep.env, ep.spawn, ep.actions);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_ascii(const RenderEpisode& ep) {
  const GridEnvironment& env = *ep.env;
  const auto states = visited(ep);
  std::vector<std::string> rows(env.height());
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) rows[y] += env.is_free(x, y) ? '.' : '#';
  for (const auto& s : states) rows[s.y][s.x] = '+';
  for (const auto& o : env.objects()) rows[o.position.y][o.position.x] = o.is_marker ? 'm' : 'o';
  if (ep.target_object_id >= 0) {
    const Position t = env.object(ep.target_object_id).position;
    rows[t.y][t.x] = '*';
  }
  const AgentState stop = states.back();
  rows[ep.spawn.y][ep.spawn.x] = 'S';
  rows[stop.y][stop.x] = (stop.position() == ep.spawn.position()) ? 'X' : 'E';

  std::string out;
  if (!ep.title.empty()) out += ep.title + "\n";
  for (const auto& r : rows) out += r + "\n";
  out += "# wall  . free  o object  m marker  * target  + path  S spawn  E stop  X spawn=stop\n";
  out += "spawn " + std::to_string(ep.spawn.x) + "," + std::to_string(ep.spawn.y) + " " + to_string(ep.spawn.heading) +
         "  stop " + std::to_string(stop.x) + "," + std::to_string(stop.y) + " " + to_string(stop.heading) + "  steps " +
         std::to_string(ep.actions.size()) + "\n";
  std::map<int, Position> anchor;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x)
      if (auto r = env.at(x, y).room_id; r && !anchor.count(*r)) anchor[*r] = {x, y};
  out += "rooms:";
  for (const auto& room : env.rooms())
    if (auto it = anchor.find(room.room_id); it != anchor.end())
      out += " " + room.label + "@" + std::to_string(it->second.x) + "," + std::to_string(it->second.y);
  out += "\n";
  return out;
}

std::string render_svg(const RenderEpisode& ep, int px) {
  const GridEnvironment& env = *ep.env;
  const auto states = visited(ep);
  static const char* kRoomTints[] = {"#fdf6e3", "#e8f4fd", "#eef8e8", "#fbeaf0", "#f3eefc", "#fff4e0"};
  const int w = env.width() * px;
  const int h = env.height() * px;
  const int title_h = ep.title.empty() ? 0 : px;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + title_h
    << "\" viewBox=\"0 0 " << w << " " << h + title_h << "\">\n";
  if (title_h)
    s << "<text x=\"4\" y=\"" << px - 5 << "\" font-family=\"monospace\" font-size=\"" << px * 0.6 << "\">"
      << escape(ep.title) << "</text>\n";
  s << "<g transform=\"translate(0," << title_h << ")\">\n";
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) {
      const Cell& c = env.at(x, y);
      const char* fill = c.terrain == Terrain::Wall ? "#333333"
                         : c.room_id               ? kRoomTints[*c.room_id % 6]
                                                   : "#ffffff";
      s << "<rect x=\"" << x * px << "\" y=\"" << y * px << "\" width=\"" << px << "\" height=\"" << px
        << "\" fill=\"" << fill << "\"/>\n";
    }
  std::map<int, Position> room_anchor;  // top-left-most cell of each room
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x)
      if (auto r = env.at(x, y).room_id; r && !room_anchor.count(*r)) room_anchor[*r] = {x, y};
  for (const auto& room : env.rooms())
    if (auto it = room_anchor.find(room.room_id); it != room_anchor.end())
      s << "<text x=\"" << it->second.x * px + 2 << "\" y=\"" << it->second.y * px + px * 0.7
        << "\" font-family=\"monospace\" font-size=\"" << px * 0.5 << "\" fill=\"#888888\">" << escape(room.label)
        << "</text>\n";
  for (const auto& o : env.objects()) {
    const double cx = (o.position.x + 0.5) * px;
    const double cy = (o.position.y + 0.5) * px;
    if (o.object_id == ep.target_object_id) {
      s << "<polygon points=\"";
      for (int i = 0; i < 10; ++i) {
        const double r = (i % 2 == 0) ? px * 0.48 : px * 0.2;
        const double a = -M_PI / 2 + i * M_PI / 5;
        s << cx + r * std::cos(a) << "," << cy + r * std::sin(a) << (i < 9 ? " " : "");
      }
      s << "\" fill=\"gold\" stroke=\"#8a6d00\"/>\n";
    } else {
      s << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << px * 0.3 << "\" fill=\"" << escape(o.color_token)
        << "\" stroke=\"" << (o.is_marker ? "#000000" : "#555555") << "\" stroke-width=\"" << (o.is_marker ? 2 : 1)
        << "\"><title>" << escape(o.type_token + " (" + o.color_token + ")") << "</title></circle>\n";
    }
  }
  s << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"" << px * 0.15 << "\" points=\"";
  for (std::size_t i = 0; i < states.size(); ++i)
    s << (states[i].x + 0.5) * px << "," << (states[i].y + 0.5) * px << (i + 1 < states.size() ? " " : "");
  s << "\"/>\n";
  const AgentState stop = states.back();
  s << "<circle cx=\"" << (ep.spawn.x + 0.5) * px << "\" cy=\"" << (ep.spawn.y + 0.5) * px << "\" r=\"" << px * 0.35
    << "\" fill=\"none\" stroke=\"blue\" stroke-width=\"2\"><title>spawn</title></circle>\n";
  const double sx = (stop.x + 0.5) * px, sy = (stop.y + 0.5) * px, d = px * 0.3;
  s << "<path d=\"M" << sx - d << "," << sy - d << " L" << sx + d << "," << sy + d << " M" << sx - d << "," << sy + d
    << " L" << sx + d << "," << sy - d << "\" stroke=\"red\" stroke-width=\"3\"><title>stop</title></path>\n";
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace eqa::io
