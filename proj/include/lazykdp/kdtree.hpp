#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace lazykdp
{
/// Static kd-tree answering exact Euclidean radius queries over a fixed point
/// set. Sets smaller than kBruteForceBelow are scanned linearly.
class KdTree
{
public:
  static constexpr size_t kBruteForceBelow = 256;
  static constexpr size_t kLeafSize = 12;

  struct Hit
  {
    size_t index;
    double distance;
  };

  KdTree() = default;

  explicit KdTree(std::vector<Eigen::VectorXd> points) : points_(std::move(points))
  {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    if (points_.size() >= kBruteForceBelow)
    {
      nodes_.reserve(2 * points_.size() / kLeafSize + 1);
      Build(0, points_.size());
    }
  }

  size_t size() const { return points_.size(); }

  /// Points with distance <= radius, ascending by distance then index.
  std::vector<Hit> RadiusSearch(const Eigen::VectorXd& query,
                                const double radius) const
  {
    std::vector<Hit> hits;
    if (points_.empty())
    {
      return hits;
    }
    if (nodes_.empty())
    {
      for (size_t i = 0; i < points_.size(); ++i)
      {
        Consider(i, query, radius, hits);
      }
    }
    else
    {
      Search(0, query, radius, hits);
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.distance < b.distance ||
             (a.distance == b.distance && a.index < b.index);
    });
    return hits;
  }

private:
  struct Node
  {
    size_t begin = 0, end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    size_t left = 0, right = 0;
  };

  size_t Build(const size_t begin, const size_t end)
  {
    const size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize)
    {
      return id;
    }
    const Eigen::Index dim = points_.front().size();
    int axis = 0;
    double widest = -1.0;
    for (Eigen::Index d = 0; d < dim; ++d)
    {
      double lo = points_[order_[begin]][d], hi = lo;
      for (size_t i = begin; i < end; ++i)
      {
        lo = std::min(lo, points_[order_[i]][d]);
        hi = std::max(hi, points_[order_[i]][d]);
      }
      if (hi - lo > widest)
      {
        widest = hi - lo;
        axis = static_cast<int>(d);
      }
    }
    const size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](size_t a, size_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const double split = points_[order_[mid]][axis];
    const size_t left = Build(begin, mid);
    const size_t right = Build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void Consider(const size_t index, const Eigen::VectorXd& query,
                const double radius, std::vector<Hit>& hits) const
  {
    const double d = (points_[index] - query).norm();
    if (d <= radius)
    {
      hits.push_back(Hit{index, d});
    }
  }

  void Search(const size_t id, const Eigen::VectorXd& query, const double radius,
              std::vector<Hit>& hits) const
  {
    const Node& node = nodes_[id];
    if (node.axis < 0)
    {
      for (size_t i = node.begin; i < node.end; ++i)
      {
        Consider(order_[i], query, radius, hits);
      }
      return;
    }
    // Left holds values <= split, right holds values >= split.
    const double diff = query[node.axis] - node.split;
    if (diff <= radius)
    {
      Search(node.left, query, radius, hits);
    }
    if (diff >= -radius)
    {
      Search(node.right, query, radius, hits);
    }
  }

  std::vector<Eigen::VectorXd> points_;
  std::vector<size_t> order_;
  std::vector<Node> nodes_;
};
}  // namespace lazykdp
