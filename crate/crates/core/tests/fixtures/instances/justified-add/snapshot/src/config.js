module.exports = function readConfig(text) {
  throw new Error('todo');
};
